#include "opevo/llm/backend.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace opevo::llm {

namespace fs = std::filesystem;

MockBackend::MockBackend(Script script) : script_(std::move(script)) {}

MockBackend::Script MockBackend::script_from_directory(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw BackendError("mock fixture directory not found: " + dir.string());
    Script script;
    for (auto kind : {PromptKind::Initialization, PromptKind::Crossover, PromptKind::Mutation, PromptKind::Repair}) {
        const fs::path sub = dir / std::string(to_string(kind));
        std::vector<fs::path> files;
        if (fs::is_directory(sub)) {
            for (const auto& e : fs::directory_iterator(sub))
                if (e.is_regular_file()) files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        auto& queue = script[kind];
        for (const auto& f : files) {
            std::ifstream in(f, std::ios::binary);
            std::ostringstream ss;
            ss << in.rdbuf();
            queue.push_back(ss.str());
        }
    }
    return script;
}

MockBackend MockBackend::from_directory(const fs::path& dir) { return MockBackend(script_from_directory(dir)); }

std::string MockBackend::complete(const ChatTranscript& transcript) {
    std::lock_guard lock(mutex_);
    history_.push_back(transcript);
    const auto kind = transcript.kind();
    auto& cursor = cursor_[kind];
    const auto it = script_.find(kind);
    if (it == script_.end() || cursor >= it->second.size())
        throw BackendError("mock fixtures exhausted for prompt kind '" + std::string(to_string(kind)) + "'");
    return it->second[cursor++];
}

std::size_t MockBackend::calls(PromptKind kind) const {
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(std::count_if(history_.begin(), history_.end(),
                                                  [&](const ChatTranscript& t) { return t.kind() == kind; }));
}

std::size_t MockBackend::total_calls() const {
    std::lock_guard lock(mutex_);
    return history_.size();
}

std::vector<ChatTranscript> MockBackend::history() const {
    std::lock_guard lock(mutex_);
    return history_;
}

OpenAIBackend::OpenAIBackend(Config config) : config_(std::move(config)) {
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.endpoint, m, url)) throw BackendError("invalid endpoint URL: " + config_.endpoint);
    scheme_host_port_ = m[1];
    path_ = m[2].matched ? std::string(m[2]) : "/v1/chat/completions";
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (scheme_host_port_.rfind("https://", 0) == 0) throw BackendError("built without TLS support; use an http:// endpoint");
#endif
}

std::string OpenAIBackend::request_body(const ChatTranscript& transcript) const {
    nlohmann::json body;
    body["model"] = config_.model;
    body["temperature"] = transcript.temperature();
    body["messages"] = nlohmann::json::array();
    for (const auto& m : transcript.messages())
        body["messages"].push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
    return body.dump();
}

std::string OpenAIBackend::complete(const ChatTranscript& transcript) {
    std::lock_guard lock(mutex_);
    const std::string body = request_body(transcript);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);

    std::string last_error;
    const int attempts = 1 + std::max(0, config_.retries);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0 && config_.retry_backoff_seconds > 0)
            std::this_thread::sleep_for(std::chrono::duration<double>(config_.retry_backoff_seconds * attempt));
        ++attempts_;
        httplib::Client client(scheme_host_port_);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());
        auto res = client.Post(path_, headers, body, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) throw BackendError("chat completion failed with HTTP " + std::to_string(res->status) + ": " + res->body);
        try {
            auto j = nlohmann::json::parse(res->body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("malformed chat completion response: ") + e.what());
        }
    }
    throw BackendError(last_error + " (after " + std::to_string(attempts) + " attempts)");
}

} // namespace opevo::llm
