#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "opevo/llm/chat.hpp"

namespace opevo::llm {

class BackendError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Backend {
public:
    virtual ~Backend() = default;
    /// Returns the model's reply to the transcript. Throws BackendError.
    virtual std::string complete(const ChatTranscript& transcript) = 0;
    virtual std::string id() const = 0;
};

/// Scripted responses, one queue per prompt kind. Each query consumes the
/// next response for the transcript's kind; an exhausted queue is an error.
class MockBackend final : public Backend {
public:
    using Script = std::map<PromptKind, std::vector<std::string>>;

    explicit MockBackend(Script script);

    /// Directory with initialization/, crossover/, mutation/, repair/
    /// subdirectories; files are consumed in lexicographic order.
    static MockBackend from_directory(const std::filesystem::path& dir);
    static Script script_from_directory(const std::filesystem::path& dir);

    std::string complete(const ChatTranscript& transcript) override;
    std::string id() const override { return "mock"; }

    std::size_t calls(PromptKind kind) const;
    std::size_t total_calls() const;
    /// Every transcript received, in order.
    std::vector<ChatTranscript> history() const;

private:
    mutable std::mutex mutex_;
    Script script_;
    std::map<PromptKind, std::size_t> cursor_;
    std::vector<ChatTranscript> history_;
};

/// Chat-completions client for OpenAI-compatible HTTP endpoints.
class OpenAIBackend final : public Backend {
public:
    struct Config {
        /// Full URL, e.g. https://api.openai.com/v1/chat/completions
        std::string endpoint = "https://api.openai.com/v1/chat/completions";
        std::string api_key;
        std::string model = "gpt-4-1106-preview";
        double timeout_seconds = 120.0;
        int retries = 2;
        double retry_backoff_seconds = 1.0;
    };

    explicit OpenAIBackend(Config config);

    std::string complete(const ChatTranscript& transcript) override;
    std::string id() const override { return "openai:" + config_.model; }

    std::size_t attempts() const { return attempts_; }

    /// Request body for the transcript (exposed for tests).
    std::string request_body(const ChatTranscript& transcript) const;

private:
    Config config_;
    std::string scheme_host_port_;
    std::string path_;
    std::mutex mutex_;
    std::size_t attempts_ = 0;
};

} // namespace opevo::llm
