#include "opevo/cli/config.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace opevo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Position-tracking walk over an already validated JSON document.
class Locator {
public:
    explicit Locator(const std::string& text) : s_(text) {}

    std::map<std::string, std::pair<int, int>> run() {
        skip_ws();
        if (i_ < s_.size()) value("");
        return out_;
    }

private:
    void advance() {
        if (s_[i_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++i_;
    }
    void skip_ws() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) advance();
    }
    std::string string_token() {
        std::string out;
        advance();  // opening quote
        while (i_ < s_.size() && s_[i_] != '"') {
            if (s_[i_] == '\\') {
                advance();
                if (i_ < s_.size()) out += s_[i_];
            } else {
                out += s_[i_];
            }
            advance();
        }
        if (i_ < s_.size()) advance();
        return out;
    }
    static std::string escape(const std::string& key) {
        std::string out;
        for (char c : key) {
            if (c == '~') out += "~0";
            else if (c == '/') out += "~1";
            else out += c;
        }
        return out;
    }
    void value(const std::string& path) {
        out_[path] = {line_, col_};
        if (i_ >= s_.size()) return;
        const char c = s_[i_];
        if (c == '{') {
            advance();
            for (;;) {
                skip_ws();
                if (i_ >= s_.size() || s_[i_] == '}') break;
                if (s_[i_] == ',') {
                    advance();
                    continue;
                }
                const std::string key = string_token();
                skip_ws();
                if (i_ < s_.size() && s_[i_] == ':') advance();
                skip_ws();
                value(path + "/" + escape(key));
            }
            if (i_ < s_.size()) advance();
        } else if (c == '[') {
            advance();
            std::size_t index = 0;
            for (;;) {
                skip_ws();
                if (i_ >= s_.size() || s_[i_] == ']') break;
                if (s_[i_] == ',') {
                    advance();
                    continue;
                }
                value(path + "/" + std::to_string(index++));
            }
            if (i_ < s_.size()) advance();
        } else if (c == '"') {
            string_token();
        } else {
            while (i_ < s_.size() && s_[i_] != ',' && s_[i_] != '}' && s_[i_] != ']' &&
                   !std::isspace(static_cast<unsigned char>(s_[i_])))
                advance();
        }
    }

    const std::string& s_;
    std::size_t i_ = 0;
    int line_ = 1;
    int col_ = 1;
    std::map<std::string, std::pair<int, int>> out_;
};

class Reader {
public:
    Reader(const std::string& text, std::string origin, fs::path base)
        : locations_(json_locations(text)), origin_(std::move(origin)), base_(std::move(base)) {}

    [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
        auto it = locations_.find(pointer);
        std::string where = origin_;
        if (it != locations_.end()) where += ":" + std::to_string(it->second.first) + ":" + std::to_string(it->second.second);
        throw ConfigFileError(where + ": " + (pointer.empty() ? "" : pointer + ": ") + message);
    }

    void require_object(const json& j, const std::string& ptr) const {
        if (!j.is_object()) fail(ptr, "expected an object");
    }

    void allow_keys(const json& obj, const std::string& ptr, std::initializer_list<const char*> keys) const {
        std::set<std::string> known;
        for (const char* k : keys) known.insert(k);
        for (const auto& [k, _] : obj.items())
            if (!known.count(k)) fail(ptr + "/" + k, "unknown key '" + k + "'");
    }

    template <class T>
    T number(const json& obj, const std::string& ptr, const char* key, T fallback, double min, double max) const {
        if (!obj.contains(key)) return fallback;
        const json& v = obj[key];
        const std::string p = ptr + "/" + key;
        if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) fail(p, "expected an integer");
        } else {
            if (!v.is_number()) fail(p, "expected a number");
        }
        const double d = v.get<double>();
        if (d < min || d > max) fail(p, "value out of range [" + fmt(min) + ", " + fmt(max) + "]");
        return v.get<T>();
    }

    std::string string(const json& obj, const std::string& ptr, const char* key, const std::string& fallback) const {
        if (!obj.contains(key)) return fallback;
        if (!obj[key].is_string()) fail(ptr + "/" + key, "expected a string");
        return obj[key].get<std::string>();
    }

    fs::path path(const json& obj, const std::string& ptr, const char* key) const {
        std::string s = string(obj, ptr, key, "");
        if (s.empty()) return {};
        fs::path p(s);
        return p.is_absolute() ? p : (base_ / p).lexically_normal();
    }

private:
    static std::string fmt(double d) {
        std::ostringstream ss;
        ss << d;
        return ss.str();
    }

    std::map<std::string, std::pair<int, int>> locations_;
    std::string origin_;
    fs::path base_;
};

} // namespace

std::map<std::string, std::pair<int, int>> json_locations(const std::string& text) { return Locator(text).run(); }

RunConfig parse_run_config(const std::string& text, const fs::path& base_dir, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        // Translate the byte offset into line:col.
        std::size_t byte = std::min<std::size_t>(e.byte ? e.byte - 1 : 0, text.size());
        int line = 1, col = 1;
        for (std::size_t i = 0; i < byte; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string what = e.what();
        auto pos = what.find("parse error");
        throw ConfigFileError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": invalid JSON: " +
                              (pos == std::string::npos ? what : what.substr(pos)));
    }
    Reader r(text, origin, base_dir);
    r.require_object(root, "");
    r.allow_keys(root, "", {"schema_version", "category", "run_seed", "n_ev", "g_ev", "n_max", "temperature", "max_t",
                            "n_trial", "population_size", "generations", "attempt_cap", "pool_size", "step_timeout",
                            "suite", "backend", "worker", "output_dir"});
    if (!root.contains("schema_version")) r.fail("", "missing required key 'schema_version'");
    if (!root["schema_version"].is_number_integer() || root["schema_version"].get<int>() != kSchemaVersion)
        r.fail("/schema_version", "unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");

    RunConfig cfg;
    auto& ev = cfg.evolution;
    if (!root.contains("category")) r.fail("", "missing required key 'category'");
    try {
        ev.category = parse_category(r.string(root, "", "category", ""));
    } catch (const std::invalid_argument& e) {
        r.fail("/category", e.what());
    }
    ev.run_seed = r.number<std::uint64_t>(root, "", "run_seed", 0, 0, 1.8e19);
    ev.n_ev = r.number<std::size_t>(root, "", "n_ev", 10, 2, 1e6);
    ev.g_ev = r.number<std::size_t>(root, "", "g_ev", 10, 1, 1e6);
    if (root.contains("n_max")) ev.n_max = r.number<std::size_t>(root, "", "n_max", 2, 2, static_cast<double>(ev.n_ev));
    ev.temperature = r.number<double>(root, "", "temperature", 0.5, 0.0, 2.0);
    ev.worker.max_pilot_seconds = r.number<double>(root, "", "max_t", 2000.0, 1e-3, 1e9);
    ev.n_trial = r.number<int>(root, "", "n_trial", 2, 1, 1000);
    ev.budget.population_size = r.number<std::size_t>(root, "", "population_size", 100, 2, 1e7);
    ev.budget.generations = r.number<std::size_t>(root, "", "generations", 200, 1, 1e7);
    ev.attempt_cap = r.number<int>(root, "", "attempt_cap", 10, 1, 1e6);
    ev.pool_size = r.number<std::size_t>(root, "", "pool_size", 0, 0, 4096);
    ev.worker.step_timeout_seconds = r.number<double>(root, "", "step_timeout", 10.0, 1e-3, 1e9);

    if (root.contains("suite")) {
        const json& s = root["suite"];
        r.require_object(s, "/suite");
        r.allow_keys(s, "/suite", {"dir", "role", "seed", "limit"});
        cfg.suite.dir = r.path(s, "/suite", "dir");
        try {
            cfg.suite.role = parse_role(r.string(s, "/suite", "role", "validation"));
        } catch (const std::invalid_argument& e) {
            r.fail("/suite/role", e.what());
        }
        cfg.suite.seed = r.number<std::uint64_t>(s, "/suite", "seed", 1, 0, 1.8e19);
        cfg.suite.limit = r.number<std::size_t>(s, "/suite", "limit", 0, 0, 1e6);
    }

    if (!root.contains("backend")) r.fail("", "missing required key 'backend'");
    {
        const json& b = root["backend"];
        r.require_object(b, "/backend");
        r.allow_keys(b, "/backend", {"type", "fixtures", "endpoint", "model", "api_key_env", "timeout", "retries"});
        auto& bc = cfg.backend;
        bc.type = r.string(b, "/backend", "type", "mock");
        if (bc.type != "mock" && bc.type != "openai") r.fail("/backend/type", "expected \"mock\" or \"openai\"");
        bc.fixtures = r.path(b, "/backend", "fixtures");
        if (bc.type == "mock" && bc.fixtures.empty()) r.fail("/backend", "mock backend needs 'fixtures'");
        bc.endpoint = r.string(b, "/backend", "endpoint", bc.endpoint);
        bc.model = r.string(b, "/backend", "model", bc.model);
        bc.api_key_env = r.string(b, "/backend", "api_key_env", bc.api_key_env);
        bc.timeout_seconds = r.number<double>(b, "/backend", "timeout", bc.timeout_seconds, 1e-3, 1e6);
        bc.retries = r.number<int>(b, "/backend", "retries", bc.retries, 0, 100);
    }

    ev.worker.command = {"opevo-worker"};
    if (root.contains("worker")) {
        const json& w = root["worker"];
        r.require_object(w, "/worker");
        r.allow_keys(w, "/worker", {"command", "stderr_cap"});
        if (w.contains("command")) {
            const json& c = w["command"];
            if (!c.is_array() || c.empty()) r.fail("/worker/command", "expected a nonempty array of strings");
            ev.worker.command.clear();
            for (std::size_t i = 0; i < c.size(); ++i) {
                if (!c[i].is_string() || c[i].get<std::string>().empty())
                    r.fail("/worker/command/" + std::to_string(i), "expected a nonempty string");
                ev.worker.command.push_back(c[i].get<std::string>());
            }
            // A relative executable path with a slash is taken relative to the config.
            auto& exe = ev.worker.command[0];
            if (exe.find('/') != std::string::npos && fs::path(exe).is_relative())
                exe = (base_dir / exe).lexically_normal().string();
        }
        ev.worker.stderr_cap = r.number<std::size_t>(w, "/worker", "stderr_cap", 20000, 1, 1e9);
    }

    if (!root.contains("output_dir")) r.fail("", "missing required key 'output_dir'");
    cfg.output_dir = r.path(root, "", "output_dir");
    if (cfg.output_dir.empty()) r.fail("/output_dir", "must be a nonempty path");

    try {
        ev.validate();
    } catch (const evolution::ConfigError& e) {
        r.fail("", e.what());
    }
    return cfg;
}

RunConfig load_run_config(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigFileError(file.string() + ": cannot read configuration file");
    std::ostringstream ss;
    ss << in.rdbuf();
    fs::path base = fs::absolute(file).parent_path();
    return parse_run_config(ss.str(), base, file.string());
}

json run_config_to_json(const RunConfig& c) {
    const auto& ev = c.evolution;
    json j{{"schema_version", kSchemaVersion},
           {"category", std::string(to_string(ev.category))},
           {"run_seed", ev.run_seed},
           {"n_ev", ev.n_ev},
           {"g_ev", ev.g_ev},
           {"n_max", ev.effective_n_max()},
           {"temperature", ev.temperature},
           {"max_t", ev.worker.max_pilot_seconds},
           {"n_trial", ev.n_trial},
           {"population_size", ev.budget.population_size},
           {"generations", ev.budget.generations},
           {"attempt_cap", ev.attempt_cap},
           {"pool_size", ev.pool_size},
           {"step_timeout", ev.worker.step_timeout_seconds},
           {"suite",
            {{"dir", c.suite.dir.string()},
             {"role", std::string(to_string(c.suite.role))},
             {"seed", c.suite.seed},
             {"limit", c.suite.limit}}},
           {"backend",
            {{"type", c.backend.type},
             {"fixtures", c.backend.fixtures.string()},
             {"endpoint", c.backend.endpoint},
             {"model", c.backend.model},
             {"api_key_env", c.backend.api_key_env},
             {"timeout", c.backend.timeout_seconds},
             {"retries", c.backend.retries}}},
           {"worker", {{"command", ev.worker.command}, {"stderr_cap", ev.worker.stderr_cap}}},
           {"output_dir", c.output_dir.string()}};
    return j;
}

} // namespace opevo::cli
