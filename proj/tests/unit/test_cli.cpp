#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "opevo/cli/commands.hpp"
#include "opevo/cli/config.hpp"
#include "opevo/cli/run_store.hpp"
#include "support.hpp"

using namespace opevo;
using namespace opevo::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::string tpl = (fs::temp_directory_path() / "opevo-cli-XXXXXX").string();
        path = ::mkdtemp(tpl.data());
    }
    ~TempDir() { fs::remove_all(path); }
};

struct CliResult {
    int code;
    std::string out, err;
};

CliResult run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

std::string mock_config(const fs::path& out_dir, const std::string& extra = "") {
    return std::string("{\n") +
           "  \"schema_version\": 1,\n"
           "  \"category\": \"mokp\",\n"
           "  \"run_seed\": 7,\n"
           "  \"n_ev\": 4,\n"
           "  \"g_ev\": 2,\n"
           "  \"population_size\": 20,\n"
           "  \"generations\": 5,\n"
           "  \"max_t\": 30,\n" + extra +
           "  \"suite\": {\"seed\": 3, \"limit\": 2},\n"
           "  \"backend\": {\"type\": \"mock\", \"fixtures\": \"" OPEVO_FIXTURES "/mock_run\"},\n"
           "  \"worker\": {\"command\": [\"" OPEVO_STUB_WORKER "\"]},\n"
           "  \"output_dir\": \"" + out_dir.string() + "\"\n"
           "}\n";
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

} // namespace

TEST_CASE("config parses and resolves relative paths") {
    auto cfg = parse_run_config(R"({"schema_version": 1, "category": "motsp", "n_ev": 6,
        "backend": {"type": "mock", "fixtures": "fx"}, "output_dir": "runs/a"})", "/base", "c.json");
    CHECK(cfg.evolution.category == Category::MOTSP);
    CHECK(cfg.evolution.n_ev == 6);
    CHECK(cfg.evolution.g_ev == 10);
    CHECK(cfg.evolution.effective_n_max() == 3);
    CHECK(cfg.evolution.budget.population_size == 100);
    CHECK(cfg.evolution.budget.generations == 200);
    CHECK(cfg.evolution.worker.max_pilot_seconds == 2000);
    CHECK(cfg.backend.fixtures == fs::path("/base/fx"));
    CHECK(cfg.output_dir == fs::path("/base/runs/a"));
    CHECK(cfg.evolution.worker.command == std::vector<std::string>{"opevo-worker"});

    auto snapshot = run_config_to_json(cfg);
    CHECK(snapshot["n_max"] == 3);
    CHECK(snapshot["backend"]["api_key_env"] == "OPENAI_API_KEY");
    CHECK_FALSE(snapshot.dump().find("test-key") != std::string::npos);
}

TEST_CASE("config errors carry a location") {
    auto error_of = [](const std::string& text) {
        try {
            parse_run_config(text, "/base", "c.json");
        } catch (const ConfigFileError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    const std::string head = "{\n  \"schema_version\": 1,\n  \"category\": \"mokp\",\n";
    const std::string tail = "  \"backend\": {\"type\": \"mock\", \"fixtures\": \"f\"},\n  \"output_dir\": \"o\"\n}\n";

    auto e = error_of(head + "  \"n_evv\": 3,\n" + tail);
    CHECK(e.rfind("c.json:4:", 0) == 0);
    CHECK(e.find("unknown key 'n_evv'") != std::string::npos);

    e = error_of(head + "  \"n_ev\": \"ten\",\n" + tail);
    CHECK(e.rfind("c.json:4:", 0) == 0);
    CHECK(e.find("/n_ev") != std::string::npos);

    e = error_of(head + "  \"temperature\": -1,\n" + tail);
    CHECK(e.rfind("c.json:4:", 0) == 0);
    CHECK(e.find("out of range") != std::string::npos);

    e = error_of(head + "  \"suite\": {\"role\": \"training\"},\n" + tail);
    CHECK(e.rfind("c.json:4:", 0) == 0);

    e = error_of("{\n  \"schema_version\": 1,\n  \"category\": \"mokp\"\n  \"x\": 1\n}");
    CHECK(e.rfind("c.json:4:", 0) == 0);
    CHECK(e.find("invalid JSON") != std::string::npos);

    CHECK(error_of("{\"category\": \"mokp\"}").find("schema_version") != std::string::npos);
    CHECK(error_of(R"({"schema_version": 2})").find("unsupported schema_version") != std::string::npos);
    CHECK(error_of(head + "  \"category2\": 1,\n" + tail).find("category2") != std::string::npos);
    CHECK(error_of(R"({"schema_version": 1, "category": "cmop", "backend": {"type": "mock"}, "output_dir": "o"})")
              .find("fixtures") != std::string::npos);
    CHECK(error_of(head + "  \"n_ev\": 4, \"n_max\": 5,\n" + tail).find("/n_max") != std::string::npos);
}

TEST_CASE("json locations") {
    auto loc = json_locations("{\n \"a\": {\n  \"b\": [1,\n 2]\n }\n}");
    CHECK(loc.at("/a").first == 2);
    CHECK(loc.at("/a/b").first == 3);
    CHECK(loc.at("/a/b/1").first == 4);
}

TEST_CASE("usage errors") {
    auto r = run({});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.rfind("error: usage: ", 0) == 0);
    CHECK(count_lines(r.err) == 1);
    CHECK(run({"frobnicate"}).code == kExitUsage);
    CHECK(run({"evolve"}).code == kExitUsage);
    TempDir tmp;
    r = run({"gen-instances", "--category", "nope", "--out", (tmp.path / "s").string()});
    CHECK(r.code == kExitUsage);
    CHECK(run({"baseline", "--algorithm", "moead", "--suite", tmp.path.string()}).code == kExitUsage);
    CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("config and backend exit codes") {
    TempDir tmp;
    auto r = run({"evolve", "--config", (tmp.path / "missing.json").string()});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.rfind("error: config: ", 0) == 0);

    write(tmp.path / "bad.json", "{\n  \"schema_version\": 1,\n  \"bogus\": true\n}\n");
    r = run({"evolve", "--config", (tmp.path / "bad.json").string()});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("bad.json:3:") != std::string::npos);
    CHECK(count_lines(r.err) == 1);

    const std::string env = "OPEVO_TEST_KEY_THAT_IS_NOT_SET";
    ::unsetenv(env.c_str());
    write(tmp.path / "openai.json", R"({"schema_version": 1, "category": "mokp",
        "backend": {"type": "openai", "endpoint": "http://127.0.0.1:9/v1/chat/completions", "api_key_env": ")" + env +
                                        R"("}, "output_dir": "run"})");
    r = run({"evolve", "--config", (tmp.path / "openai.json").string()});
    CHECK(r.code == kExitBackend);
    CHECK(r.err.find(env) != std::string::npos);

    write(tmp.path / "noworker.json", mock_config(tmp.path / "run0").replace(
        mock_config(tmp.path / "run0").find(OPEVO_STUB_WORKER), std::string(OPEVO_STUB_WORKER).size(),
        "/nonexistent/worker"));
    r = run({"evolve", "--config", (tmp.path / "noworker.json").string()});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("/nonexistent/worker") != std::string::npos);
}

TEST_CASE("initialization abort exits with its own code") {
    TempDir tmp;
    write(tmp.path / "fx" / "initialization" / "01.txt", "no tags here");
    std::string cfg = mock_config(tmp.path / "run", "  \"attempt_cap\": 1,\n");
    cfg.replace(cfg.find(OPEVO_FIXTURES "/mock_run"), std::string(OPEVO_FIXTURES "/mock_run").size(),
                (tmp.path / "fx").string());
    write(tmp.path / "c.json", cfg);
    auto r = run({"evolve", "--config", (tmp.path / "c.json").string()});
    CHECK(r.code == kExitAborted);
    CHECK(r.err.rfind("error: aborted: ", 0) == 0);
    CHECK(slurp(tmp.path / "run" / "events.jsonl").find("initialization_aborted") != std::string::npos);
}

TEST_CASE("evolve writes a reproducible run") {
    TempDir tmp;
    write(tmp.path / "a.json", mock_config(tmp.path / "run_a"));
    write(tmp.path / "b.json", mock_config(tmp.path / "run_b"));
    auto r = run({"evolve", "--config", (tmp.path / "a.json").string()});
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
    REQUIRE(run({"evolve", "--config", (tmp.path / "b.json").string()}).code == kExitOk);

    const fs::path a = tmp.path / "run_a", b = tmp.path / "run_b";
    for (const char* f : {"convergence.csv", "generations.jsonl", "scores.jsonl", "events.jsonl"})
        CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
    CHECK(fs::exists(a / "config.json"));
    CHECK(fs::exists(a / "suite" / "manifest.json"));
    CHECK(fs::exists(a / "operators" / "gen_00" / "op_00.src"));
    CHECK(fs::exists(a / "operators" / "gen_00" / "op_00.meta.json"));

    const std::string conv = slurp(a / "convergence.csv");
    CHECK(conv.rfind("generation,best_score,best_operator\n", 0) == 0);
    CHECK(count_lines(conv) == 4);
    std::istringstream rows(conv);
    std::string line;
    std::getline(rows, line);
    double prev = -1e9;
    while (std::getline(rows, line)) {
        double v = std::stod(line.substr(line.find(',') + 1));
        CHECK(v >= prev);
        prev = v;
    }

    // report regenerates identical files
    const std::string before = slurp(a / "convergence.csv");
    fs::remove(a / "convergence.csv");
    REQUIRE(run({"report", "--run", a.string()}).code == kExitOk);
    CHECK(slurp(a / "convergence.csv") == before);
    CHECK(fs::exists(a / "report"));

    // existing runs are kept unless forced
    r = run({"evolve", "--config", (tmp.path / "a.json").string()});
    CHECK(r.code == kExitConfig);
    CHECK(run({"evolve", "--config", (tmp.path / "a.json").string(), "--force"}).code == kExitOk);
    CHECK(slurp(a / "convergence.csv") == before);

    CHECK(run({"report", "--run", (tmp.path / "nope").string()}).code == kExitConfig);
}

TEST_CASE("eval-operator and baseline tables") {
    TempDir tmp;
    const fs::path suite = tmp.path / "suite";
    auto r = run({"gen-instances", "--category", "mokp", "--role", "testing", "--seed", "5", "--out", suite.string()});
    REQUIRE(r.code == kExitOk);
    auto s = read_suite_dir(suite);
    CHECK(s.instances.size() == 10);
    CHECK(s.role == SuiteRole::Testing);

    write(tmp.path / "op.py", testsupport::stub_source("ga"));
    r = run({"eval-operator", "--operator-file", (tmp.path / "op.py").string(), "--suite", suite.string(), "--population",
             "20", "--generations", "5", "--worker", OPEVO_STUB_WORKER, "--baseline", "--out", (tmp.path / "out").string()});
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
    const std::string matrix = slurp(tmp.path / "out" / "operator_metric_matrix.csv");
    CHECK(count_lines(matrix) == 11);
    std::istringstream rows(matrix);
    std::string line;
    while (std::getline(rows, line)) CHECK(std::count(line.begin(), line.end(), ',') == 10);
    CHECK(fs::exists(tmp.path / "out" / "nsga2_metric_matrix.csv"));
    const std::string table = slurp(tmp.path / "out" / "table.csv");
    CHECK(table.rfind("instance,operator,nsga2,best\n", 0) == 0);
    CHECK(count_lines(table) == 11);
    CHECK(r.out.find("HV") != std::string::npos);

    // a failing operator still fills the table, scored at the worst value
    write(tmp.path / "bad.py", testsupport::stub_source("divzero"));
    r = run({"eval-operator", "--operator-file", (tmp.path / "bad.py").string(), "--suite", suite.string(), "--seeds",
             "2", "--population", "20", "--generations", "3", "--worker", OPEVO_STUB_WORKER, "--out",
             (tmp.path / "bad").string()});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("20 failed runs scored 0") != std::string::npos);
    CHECK(slurp(tmp.path / "bad" / "operator_score_matrix.csv").find(",0,0,0,0,0,0,0,0,0,0\n") != std::string::npos);

    r = run({"baseline", "--algorithm", "nsga2", "--suite", suite.string(), "--seeds", "3", "--population", "20",
             "--generations", "5", "--out", (tmp.path / "base").string()});
    REQUIRE(r.code == kExitOk);
    CHECK(count_lines(slurp(tmp.path / "base" / "nsga2_metric_matrix.csv")) == 4);

    write(tmp.path / "empty.py", "  \n");
    CHECK(run({"eval-operator", "--operator-file", (tmp.path / "empty.py").string(), "--suite", suite.string(),
               "--worker", OPEVO_STUB_WORKER}).code == kExitConfig);
}

TEST_CASE("metric table marks the best method") {
    MetricTable t;
    t.metric_name = "IGD";
    t.lower_is_better = true;
    t.methods = {"a", "b"};
    t.instances = {"x", "y"};
    t.values = {{0.1, 0.2}, {0.3, 0.3}};
    CHECK(t.best() == std::vector<std::size_t>{0, 0});
    CHECK(t.to_csv() == "instance,a,b,best\nx,0.1,0.2,a\ny,0.3,0.3,a\n");
    t.lower_is_better = false;
    CHECK(t.best() == std::vector<std::size_t>{1, 0});
    CHECK(t.to_text().find("1.0000e-01") != std::string::npos);
}
