#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "opevo/evolution.hpp"

namespace opevo::cli {

inline constexpr int kSchemaVersion = 1;

/// Invalid configuration; the message carries "file:line:col: ..." when a
/// location is known.
class ConfigFileError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BackendConfig {
    std::string type = "mock";  // mock | openai
    std::filesystem::path fixtures;
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-4-1106-preview";
    std::string api_key_env = "OPENAI_API_KEY";
    double timeout_seconds = 120.0;
    int retries = 2;
};

struct SuiteSource {
    /// Generated on the fly when dir is empty.
    std::filesystem::path dir;
    SuiteRole role = SuiteRole::Validation;
    std::uint64_t seed = 1;
    /// Keep only the first `limit` instances (0 keeps all).
    std::size_t limit = 0;
};

struct RunConfig {
    evolution::EvolutionConfig evolution;
    SuiteSource suite;
    BackendConfig backend;
    std::filesystem::path output_dir;
};

/// Parses and validates a configuration document. Relative paths are
/// resolved against `base_dir`. `origin` names the document in messages.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir,
                           const std::string& origin = "config");
RunConfig load_run_config(const std::filesystem::path& file);

/// Normalized snapshot with every key present.
nlohmann::json run_config_to_json(const RunConfig& config);

/// Line (1-based) of every JSON pointer in a document, e.g. "/backend/type".
std::map<std::string, std::pair<int, int>> json_locations(const std::string& text);

} // namespace opevo::cli
