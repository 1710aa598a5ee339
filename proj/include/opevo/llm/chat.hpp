#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace opevo::llm {

enum class Role { System, User, Assistant };
std::string_view to_string(Role r);

/// Which template produced the latest request in a transcript.
enum class PromptKind { Initialization, Crossover, Mutation, Repair };
std::string_view to_string(PromptKind k);
PromptKind parse_prompt_kind(std::string_view s);

struct ChatMessage {
    Role role = Role::User;
    std::string content;
};

class TranscriptError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Append-only dialogue with one backend. A system message may only be the
/// first entry.
class ChatTranscript {
public:
    explicit ChatTranscript(PromptKind kind, double temperature = 0.5) : kind_(kind), temperature_(temperature) {}

    void append(Role role, std::string content);

    const std::vector<ChatMessage>& messages() const { return messages_; }
    PromptKind kind() const { return kind_; }
    void set_kind(PromptKind kind) { kind_ = kind; }
    double temperature() const { return temperature_; }
    void set_temperature(double t) { temperature_ = t; }
    const std::string& backend_id() const { return backend_id_; }
    void set_backend_id(std::string id) { backend_id_ = std::move(id); }

    /// Sum of message lengths.
    std::size_t size_chars() const;
    /// Content of the last user message (empty when there is none).
    const std::string& last_user_message() const;

private:
    std::vector<ChatMessage> messages_;
    PromptKind kind_;
    double temperature_;
    std::string backend_id_;
};

} // namespace opevo::llm
