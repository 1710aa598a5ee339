#include "opevo/llm/chat.hpp"

#include <string>

namespace opevo::llm {

std::string_view to_string(Role r) {
    switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    }
    return "?";
}

std::string_view to_string(PromptKind k) {
    switch (k) {
    case PromptKind::Initialization: return "initialization";
    case PromptKind::Crossover: return "crossover";
    case PromptKind::Mutation: return "mutation";
    case PromptKind::Repair: return "repair";
    }
    return "?";
}

PromptKind parse_prompt_kind(std::string_view s) {
    for (auto k : {PromptKind::Initialization, PromptKind::Crossover, PromptKind::Mutation, PromptKind::Repair})
        if (s == to_string(k)) return k;
    throw std::invalid_argument("unknown prompt kind '" + std::string(s) + "'");
}

void ChatTranscript::append(Role role, std::string content) {
    if (content.empty()) throw TranscriptError("chat message content must be nonempty");
    if (role == Role::System && !messages_.empty()) throw TranscriptError("system message must come first");
    messages_.push_back({role, std::move(content)});
}

std::size_t ChatTranscript::size_chars() const {
    std::size_t n = 0;
    for (const auto& m : messages_) n += m.content.size();
    return n;
}

const std::string& ChatTranscript::last_user_message() const {
    static const std::string empty;
    for (auto it = messages_.rbegin(); it != messages_.rend(); ++it)
        if (it->role == Role::User) return it->content;
    return empty;
}

} // namespace opevo::llm
