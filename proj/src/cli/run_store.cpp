#include "opevo/cli/run_store.hpp"

#include <cstdio>
#include <map>
#include <regex>
#include <sstream>

namespace opevo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& file, const std::string& text) {
    fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw RunStoreError("cannot write " + file.string());
    out << text;
}

std::string read_text(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw RunStoreError("cannot read " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<json> read_jsonl(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw RunStoreError("cannot read " + file.string());
    std::vector<json> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw RunStoreError(file.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

std::ofstream open_append(const fs::path& file) {
    std::ofstream out(file, std::ios::binary | std::ios::app);
    if (!out) throw RunStoreError("cannot open " + file.string());
    return out;
}

} // namespace

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_suite_dir(const SuiteSpec& suite, const fs::path& dir) {
    fs::create_directories(dir);
    json manifest{{"category", std::string(to_string(suite.category))},
                  {"role", std::string(to_string(suite.role))},
                  {"instances", json::array()}};
    for (const auto& inst : suite.instances) {
        manifest["instances"].push_back(inst.id);
        write_text(dir / (inst.id + ".json"), instance_to_json(inst).dump() + "\n");
    }
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

SuiteSpec read_suite_dir(const fs::path& dir) {
    const fs::path manifest_file = dir / "manifest.json";
    json manifest;
    try {
        manifest = json::parse(read_text(manifest_file));
    } catch (const json::exception& e) {
        throw RunStoreError(manifest_file.string() + ": " + e.what());
    }
    SuiteSpec suite;
    try {
        suite.category = parse_category(manifest.at("category").get<std::string>());
        suite.role = parse_role(manifest.at("role").get<std::string>());
        for (const auto& id : manifest.at("instances")) {
            const fs::path f = dir / (id.get<std::string>() + ".json");
            auto inst = instance_from_json(json::parse(read_text(f)));
            if (inst.category != suite.category) throw RunStoreError(f.string() + ": category differs from the manifest");
            suite.instances.push_back(std::move(inst));
        }
    } catch (const json::exception& e) {
        throw RunStoreError(manifest_file.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw RunStoreError(dir.string() + ": " + e.what());
    }
    return suite;
}

fs::path artifact_stem(const fs::path& run_dir, const std::string& id) {
    static const std::regex pattern(R"(g(\d+)_op(\d+))");
    std::smatch m;
    if (!std::regex_match(id, m, pattern)) return run_dir / "operators" / "other" / id;
    return run_dir / "operators" / ("gen_" + m[1].str()) / ("op_" + m[2].str());
}

RunWriter::RunWriter(fs::path root, bool overwrite) : root_(std::move(root)) {
    if (fs::exists(root_) && !fs::is_empty(root_)) {
        if (!overwrite) throw RunStoreError("run directory " + root_.string() + " exists and is not empty");
        fs::remove_all(root_);
    }
    fs::create_directories(root_ / "operators");
    scores_ = open_append(root_ / "scores.jsonl");
    events_ = open_append(root_ / "events.jsonl");
    generations_ = open_append(root_ / "generations.jsonl");
}

void RunWriter::write_config(const json& config) {
    std::lock_guard lock(mutex_);
    write_text(root_ / "config.json", config.dump(2) + "\n");
}

void RunWriter::write_suite(const SuiteSpec& suite) {
    std::lock_guard lock(mutex_);
    write_suite_dir(suite, root_ / "suite");
}

void RunWriter::artifact(const sandbox::OperatorArtifact& a, const std::string& stage) {
    std::lock_guard lock(mutex_);
    const fs::path stem = artifact_stem(root_, a.id);
    write_text(fs::path(stem.string() + ".src"), a.source.back() == '\n' ? a.source : a.source + "\n");
    json meta = sandbox::artifact_meta_json(a);
    meta["stage"] = stage;
    write_text(fs::path(stem.string() + ".meta.json"), meta.dump(2) + "\n");
}

void RunWriter::scored(const evolution::OperatorCandidate& c, const std::vector<sandbox::EvaluationResult>& results,
                       std::uint64_t run_seed) {
    std::lock_guard lock(mutex_);
    const fs::path stem = artifact_stem(root_, c.artifact.id);
    const fs::path meta_file(stem.string() + ".meta.json");
    json meta = fs::exists(meta_file) ? json::parse(read_text(meta_file)) : sandbox::artifact_meta_json(c.artifact);
    if (!fs::exists(fs::path(stem.string() + ".src")))
        write_text(fs::path(stem.string() + ".src"), c.artifact.source + "\n");
    meta["generation_admitted"] = c.generation_admitted;
    meta["score"] = c.score();
    meta["per_problem"] = c.report ? json(c.report->per_problem) : json::object();
    write_text(meta_file, meta.dump(2) + "\n");

    for (const auto& r : results) {
        json line{{"operator", c.artifact.id},
                  {"generation", c.generation_admitted},
                  {"instance", r.instance_id},
                  {"seed", evolution::evaluation_seed(run_seed, c.artifact.id, r.instance_id)},
                  {"ps", r.ps},
                  {"metric", r.metric ? json(*r.metric) : json(nullptr)},
                  {"failure", r.failure},
                  {"trace", r.trace}};
        scores_ << line.dump() << '\n';
    }
    scores_.flush();
}

void RunWriter::event(const std::string& type, const json& data) {
    std::lock_guard lock(mutex_);
    events_ << json{{"seq", event_seq_++}, {"type", type}, {"data", data}}.dump() << '\n';
    events_.flush();
}

void RunWriter::generation(std::size_t gen, const std::vector<evolution::OperatorCandidate>& population) {
    std::lock_guard lock(mutex_);
    json pop = json::array();
    for (const auto& c : population) pop.push_back({{"id", c.artifact.id}, {"score", c.score()}});
    generations_ << json{{"generation", gen},
                         {"best_operator", population.front().artifact.id},
                         {"best_score", population.front().score()},
                         {"population", pop}}
                        .dump()
                 << '\n';
    generations_.flush();
}

void RunWriter::flush() {
    std::lock_guard lock(mutex_);
    scores_.flush();
    events_.flush();
    generations_.flush();
}

evolution::EvolutionHooks RunWriter::hooks(std::uint64_t run_seed) {
    evolution::EvolutionHooks h;
    h.artifact = [this](const sandbox::OperatorArtifact& a, const std::string& stage) { artifact(a, stage); };
    h.scored = [this, run_seed](const evolution::OperatorCandidate& c,
                                const std::vector<sandbox::EvaluationResult>& r) { scored(c, r, run_seed); };
    h.event = [this](const std::string& type, const json& data) { event(type, data); };
    h.generation = [this](std::size_t g, const std::vector<evolution::OperatorCandidate>& p) { generation(g, p); };
    return h;
}

std::string convergence_csv(const fs::path& run_dir) {
    std::string out = "generation,best_score,best_operator\n";
    for (const auto& g : read_jsonl(run_dir / "generations.jsonl")) {
        out += std::to_string(g.at("generation").get<std::size_t>()) + "," +
               format_real(g.at("best_score").get<double>()) + "," + g.at("best_operator").get<std::string>() + "\n";
    }
    return out;
}

std::vector<fs::path> write_report(const fs::path& run_dir) {
    std::vector<fs::path> written;
    const auto generations = read_jsonl(run_dir / "generations.jsonl");
    if (generations.empty()) throw RunStoreError(run_dir.string() + ": no generation records");
    write_text(run_dir / "convergence.csv", convergence_csv(run_dir));
    written.push_back(run_dir / "convergence.csv");

    const std::string best = generations.back().at("best_operator").get<std::string>();
    std::map<std::string, std::vector<double>> traces;
    for (const auto& s : read_jsonl(run_dir / "scores.jsonl"))
        if (s.at("operator") == best) traces[s.at("instance").get<std::string>()] = s.at("trace").get<std::vector<double>>();
    for (const auto& [instance, trace] : traces) {
        std::string csv = "generation,metric,operator\n";
        for (std::size_t g = 0; g < trace.size(); ++g)
            csv += std::to_string(g) + "," + format_real(trace[g]) + "," + best + "\n";
        const fs::path f = run_dir / "report" / ("instance_" + instance + ".csv");
        write_text(f, csv);
        written.push_back(f);
    }
    return written;
}

} // namespace opevo::cli
