#include "opevo/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "opevo/cli/config.hpp"
#include "opevo/cli/run_store.hpp"
#include "opevo/evolution.hpp"
#include "opevo/llm/extract.hpp"
#include "opevo/nsga2.hpp"

namespace opevo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::size_t> MetricTable::best() const {
    std::vector<std::size_t> out;
    for (const auto& row : values) {
        std::size_t b = 0;
        for (std::size_t m = 1; m < row.size(); ++m)
            if (lower_is_better ? row[m] < row[b] : row[m] > row[b]) b = m;
        out.push_back(b);
    }
    return out;
}

std::string MetricTable::to_csv() const {
    std::string out = "instance";
    for (const auto& m : methods) out += "," + m;
    out += ",best\n";
    const auto b = best();
    for (std::size_t i = 0; i < instances.size(); ++i) {
        out += instances[i];
        for (double v : values[i]) out += "," + format_real(v);
        out += "," + methods[b[i]] + "\n";
    }
    return out;
}

std::string MetricTable::to_text() const {
    std::size_t w0 = std::string("instance").size();
    for (const auto& i : instances) w0 = std::max(w0, i.size());
    std::vector<std::size_t> w;
    for (const auto& m : methods) w.push_back(std::max<std::size_t>(m.size(), 12));
    std::ostringstream ss;
    ss << metric_name << " (mean over runs, " << (lower_is_better ? "lower" : "higher") << " is better, * = best)\n";
    ss << std::left << std::setw(static_cast<int>(w0)) << "instance";
    for (std::size_t m = 0; m < methods.size(); ++m) ss << "  " << std::setw(static_cast<int>(w[m] + 1)) << methods[m];
    ss << "\n";
    const auto b = best();
    for (std::size_t i = 0; i < instances.size(); ++i) {
        ss << std::left << std::setw(static_cast<int>(w0)) << instances[i];
        for (std::size_t m = 0; m < methods.size(); ++m) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.4e", values[i][m]);
            std::string cell = std::string(buf) + (b[i] == m ? "*" : "");
            ss << "  " << std::setw(static_cast<int>(w[m] + 1)) << cell;
        }
        ss << "\n";
    }
    return ss.str();
}

namespace {

struct CliFailure {
    ExitCode code;
    std::string kind;
    std::string message;
};

[[noreturn]] void fail(ExitCode code, const std::string& kind, const std::string& message) {
    throw CliFailure{code, kind, message};
}

std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

void write_file(const fs::path& file, const std::string& text) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) fail(kExitConfig, "io", "cannot write " + file.string());
    out << text;
}

SuiteSpec load_suite(const fs::path& dir) {
    try {
        return read_suite_dir(dir);
    } catch (const std::exception& e) {
        fail(kExitConfig, "config", e.what());
    }
}

std::vector<std::string> split_command(const std::string& s) {
    std::istringstream ss(s);
    std::vector<std::string> out;
    std::string part;
    while (ss >> part) out.push_back(part);
    return out;
}

void check_worker(const std::vector<std::string>& command) {
    if (command.empty()) fail(kExitConfig, "config", "worker command is empty");
    try {
        sandbox::resolve_executable(command[0]);
    } catch (const sandbox::WorkerLaunchError& e) {
        fail(kExitConfig, "config", e.what());
    }
}

// Runs fn(task) for task in [0, n) on up to `jobs` threads.
template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
    };
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < std::min(jobs, n); ++t) threads.emplace_back(work);
    work();
    for (auto& t : threads) t.join();
}

std::string matrix_csv(const std::vector<std::string>& instances, const std::vector<std::vector<double>>& m) {
    // m[instance][seed] -> one row per seed
    std::string out = "seed";
    for (const auto& i : instances) out += "," + i;
    out += "\n";
    const std::size_t seeds = m.empty() ? 0 : m[0].size();
    for (std::size_t s = 0; s < seeds; ++s) {
        out += std::to_string(s);
        for (std::size_t i = 0; i < instances.size(); ++i) out += "," + format_real(m[i][s]);
        out += "\n";
    }
    return out;
}

struct RunMatrix {
    std::vector<std::vector<double>> metric;  // [instance][seed]
    std::vector<std::vector<double>> ps;
};

double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

struct TableOptions {
    fs::path suite;
    std::size_t seeds = 10;
    std::uint64_t seed = 0;
    std::size_t population = 100;
    std::size_t generations = 200;
    std::size_t jobs = 0;
    fs::path out;
};

RunMatrix run_nsga2(const std::vector<InstanceScorer>& scorers, const TableOptions& o) {
    RunMatrix r;
    r.metric.assign(scorers.size(), std::vector<double>(o.seeds));
    r.ps = r.metric;
    SolverConfig cfg;
    cfg.population_size = o.population;
    cfg.generations = o.generations;
    parallel_for(scorers.size() * o.seeds, o.jobs, [&](std::size_t task) {
        const std::size_t i = task / o.seeds, s = task % o.seeds;
        auto res = nsga2_run(scorers[i], cfg, derive_seed(o.seed, s));
        r.metric[i][s] = scorers[i].metric(res.front.points);
        r.ps[i][s] = problem_score(scorers[i].instance().category, r.metric[i][s]);
    });
    return r;
}

void emit_table(const MetricTable& table, const std::vector<std::string>& instances, const RunMatrix& main,
                const std::string& prefix, const fs::path& out_dir, std::ostream& out) {
    out << table.to_text();
    if (out_dir.empty()) return;
    write_file(out_dir / "table.csv", table.to_csv());
    write_file(out_dir / "table.txt", table.to_text());
    write_file(out_dir / (prefix + "_metric_matrix.csv"), matrix_csv(instances, main.metric));
    write_file(out_dir / (prefix + "_score_matrix.csv"), matrix_csv(instances, main.ps));
}

MetricTable make_table(const std::vector<InstanceScorer>& scorers) {
    MetricTable t;
    const Category c = scorers.front().instance().category;
    t.metric_name = c == Category::CMOP ? "IGD" : "HV";
    t.lower_is_better = scorers.front().lower_is_better();
    for (const auto& s : scorers) t.instances.push_back(s.instance().id);
    t.values.assign(scorers.size(), {});
    return t;
}

void add_options(CLI::App* cmd, TableOptions& o) {
    cmd->add_option("--suite", o.suite, "suite directory written by gen-instances")->required();
    cmd->add_option("--seeds", o.seeds, "independent runs per instance")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", o.seed, "base seed");
    cmd->add_option("--population", o.population, "population size")->check(CLI::Range(2, 10000000));
    cmd->add_option("--generations", o.generations, "generations")->check(CLI::PositiveNumber);
    cmd->add_option("--jobs", o.jobs, "parallel runs (default: hardware threads)");
    cmd->add_option("--out", o.out, "directory for CSV output");
}

std::vector<InstanceScorer> scorers_for(const SuiteSpec& suite) {
    if (suite.instances.empty()) fail(kExitConfig, "config", "suite is empty");
    std::vector<InstanceScorer> out;
    for (const auto& inst : suite.instances) out.emplace_back(inst);
    return out;
}

std::size_t jobs_or_default(std::size_t jobs) {
    return jobs ? jobs : std::max<unsigned>(1, std::thread::hardware_concurrency());
}

int cmd_gen_instances(const std::string& category, const std::string& role, std::uint64_t seed, const fs::path& out_dir,
                      std::ostream& out) {
    Category c;
    SuiteRole r;
    try {
        c = parse_category(category);
        r = parse_role(role);
    } catch (const std::invalid_argument& e) {
        fail(kExitUsage, "usage", e.what());
    }
    Rng rng(seed);
    SuiteSpec suite = make_suite(c, r, rng);
    write_suite_dir(suite, out_dir);
    out << "wrote " << suite.instances.size() << " instances to " << out_dir.string() << "\n";
    return kExitOk;
}

std::unique_ptr<llm::Backend> make_backend(const BackendConfig& b) {
    if (b.type == "mock") {
        try {
            return std::make_unique<llm::MockBackend>(llm::MockBackend::script_from_directory(b.fixtures));
        } catch (const llm::BackendError& e) {
            fail(kExitConfig, "config", e.what());
        }
    }
    const char* key = std::getenv(b.api_key_env.c_str());
    if (!key || !*key) fail(kExitBackend, "backend", "API key environment variable " + b.api_key_env + " is not set");
    llm::OpenAIBackend::Config c;
    c.endpoint = b.endpoint;
    c.api_key = key;
    c.model = b.model;
    c.timeout_seconds = b.timeout_seconds;
    c.retries = b.retries;
    try {
        return std::make_unique<llm::OpenAIBackend>(c);
    } catch (const llm::BackendError& e) {
        fail(kExitBackend, "backend", e.what());
    }
}

int cmd_evolve(const fs::path& config_file, bool force, std::ostream& out) {
    RunConfig cfg;
    try {
        cfg = load_run_config(config_file);
    } catch (const ConfigFileError& e) {
        fail(kExitConfig, "config", e.what());
    }
    auto backend = make_backend(cfg.backend);
    check_worker(cfg.evolution.worker.command);

    SuiteSpec suite;
    if (!cfg.suite.dir.empty()) {
        suite = load_suite(cfg.suite.dir);
    } else {
        Rng rng(cfg.suite.seed);
        suite = make_suite(cfg.evolution.category, cfg.suite.role, rng);
    }
    if (cfg.suite.limit && suite.instances.size() > cfg.suite.limit) suite.instances.resize(cfg.suite.limit);
    if (suite.category != cfg.evolution.category)
        fail(kExitConfig, "config", "suite category " + std::string(to_string(suite.category)) +
                                        " differs from run category " + std::string(to_string(cfg.evolution.category)));

    std::unique_ptr<RunWriter> writer;
    try {
        writer = std::make_unique<RunWriter>(cfg.output_dir, force);
    } catch (const std::exception& e) {
        fail(kExitConfig, "config", e.what());
    }
    writer->write_config(run_config_to_json(cfg));
    writer->write_suite(suite);

    evolution::EvolutionResult result;
    try {
        result = evolution::evolve(cfg.evolution, suite, *backend, writer->hooks(cfg.evolution.run_seed));
    } catch (const evolution::InitializationAborted& e) {
        writer->flush();
        fail(kExitAborted, "aborted", e.what());
    } catch (const sandbox::WorkerLaunchError& e) {
        writer->flush();
        fail(kExitConfig, "config", e.what());
    }
    writer->flush();
    write_report(cfg.output_dir);
    out << "run: " << cfg.output_dir.string() << "\n";
    out << "best: " << result.best.artifact.id << " score " << format_real(result.best.score()) << "\n";
    out << "scored operators: " << result.scored_operators << ", model calls: " << result.llm_calls << "\n";
    return kExitOk;
}

std::string read_operator_file(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) fail(kExitConfig, "config", "cannot read operator file " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    if (text.find(llm::kOpenTag) != std::string::npos) {
        try {
            return llm::extract_operator(text);
        } catch (const llm::ExtractError& e) {
            fail(kExitConfig, "config", file.string() + ": " + e.what());
        }
    }
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) fail(kExitConfig, "config", "operator file is empty");
    return text;
}

int cmd_eval_operator(const fs::path& operator_file, const TableOptions& o, const std::string& worker,
                      double step_timeout, bool with_baseline, std::ostream& out) {
    sandbox::OperatorArtifact op;
    op.id = operator_file.stem().string();
    op.source = read_operator_file(operator_file);
    sandbox::WorkerSpec spec;
    spec.command = split_command(worker);
    spec.step_timeout_seconds = step_timeout;
    check_worker(spec.command);

    const SuiteSpec suite = load_suite(o.suite);
    const auto scorers = scorers_for(suite);
    const std::size_t jobs = jobs_or_default(o.jobs);

    RunMatrix r;
    r.metric.assign(scorers.size(), std::vector<double>(o.seeds));
    r.ps = r.metric;
    std::vector<std::vector<std::string>> failures(scorers.size(), std::vector<std::string>(o.seeds));
    parallel_for(scorers.size() * o.seeds, jobs, [&](std::size_t task) {
        const std::size_t i = task / o.seeds, s = task % o.seeds;
        auto res = sandbox::evaluate_operator(op, scorers[i], spec, {o.population, o.generations}, derive_seed(o.seed, s));
        // Failed runs keep the worst metric value: PS 0 on the table's scale.
        const Category c = scorers[i].instance().category;
        r.metric[i][s] = res.metric ? *res.metric : (c == Category::MOTSP ? 0.0 : 1.0);
        r.ps[i][s] = res.ps;
        failures[i][s] = res.failure;
    });

    MetricTable table = make_table(scorers);
    table.methods = {"operator"};
    RunMatrix base;
    if (with_baseline) {
        table.methods.push_back("nsga2");
        TableOptions bo = o;
        bo.jobs = jobs;
        base = run_nsga2(scorers, bo);
    }
    for (std::size_t i = 0; i < scorers.size(); ++i) {
        table.values[i].push_back(mean(r.metric[i]));
        if (with_baseline) table.values[i].push_back(mean(base.metric[i]));
    }
    emit_table(table, table.instances, r, "operator", o.out, out);
    if (with_baseline && !o.out.empty()) {
        write_file(o.out / "nsga2_metric_matrix.csv", matrix_csv(table.instances, base.metric));
        write_file(o.out / "nsga2_score_matrix.csv", matrix_csv(table.instances, base.ps));
    }
    std::size_t failed = 0;
    for (std::size_t i = 0; i < scorers.size(); ++i)
        for (std::size_t s = 0; s < o.seeds; ++s)
            if (!failures[i][s].empty()) {
                ++failed;
                if (!o.out.empty()) {
                    std::ofstream log(o.out / "failures.log", std::ios::app);
                    log << table.instances[i] << " seed " << s << ": " << one_line(failures[i][s]) << "\n";
                }
            }
    if (failed) out << failed << " failed runs scored 0\n";
    return kExitOk;
}

int cmd_baseline(const std::string& algorithm, const TableOptions& o, std::ostream& out) {
    if (algorithm != "nsga2") fail(kExitUsage, "usage", "unknown algorithm '" + algorithm + "' (supported: nsga2)");
    const SuiteSpec suite = load_suite(o.suite);
    const auto scorers = scorers_for(suite);
    TableOptions bo = o;
    bo.jobs = jobs_or_default(o.jobs);
    RunMatrix r = run_nsga2(scorers, bo);
    MetricTable table = make_table(scorers);
    table.methods = {"nsga2"};
    for (std::size_t i = 0; i < scorers.size(); ++i) table.values[i].push_back(mean(r.metric[i]));
    emit_table(table, table.instances, r, "nsga2", o.out, out);
    return kExitOk;
}

int cmd_report(const fs::path& run_dir, std::ostream& out) {
    if (!fs::is_directory(run_dir)) fail(kExitConfig, "config", "run directory not found: " + run_dir.string());
    std::vector<fs::path> files;
    try {
        files = write_report(run_dir);
    } catch (const RunStoreError& e) {
        fail(kExitConfig, "config", e.what());
    }
    for (const auto& f : files) out << f.string() << "\n";
    return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Evolve multi-objective evolutionary operators with a language model", "opevo"};
    app.require_subcommand(1);

    std::string category, role = "validation";
    std::uint64_t gen_seed = 1;
    fs::path gen_out;
    auto* gen = app.add_subcommand("gen-instances", "generate a problem suite");
    gen->add_option("--category", category, "cmop, mokp or motsp")->required();
    gen->add_option("--role", role, "validation or testing");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output directory")->required();

    fs::path config_file;
    bool force = false;
    auto* evolve = app.add_subcommand("evolve", "run the operator evolution");
    evolve->add_option("--config", config_file, "run configuration (JSON)")->required();
    evolve->add_flag("--force", force, "replace an existing run directory");

    fs::path operator_file;
    TableOptions eval_opts;
    std::string worker = "opevo-worker";
    double step_timeout = 10.0;
    bool with_baseline = false;
    auto* eval = app.add_subcommand("eval-operator", "score a stored operator over a suite");
    eval->add_option("--operator-file", operator_file, "operator source or model response")->required();
    add_options(eval, eval_opts);
    eval->add_option("--worker", worker, "worker command line");
    eval->add_option("--step-timeout", step_timeout, "seconds per worker reply")->check(CLI::PositiveNumber);
    eval->add_flag("--baseline", with_baseline, "add an NSGA-II column");

    std::string algorithm;
    TableOptions base_opts;
    auto* baseline = app.add_subcommand("baseline", "score the reference solver over a suite");
    baseline->add_option("--algorithm", algorithm, "nsga2")->required();
    add_options(baseline, base_opts);

    fs::path run_dir;
    auto* report = app.add_subcommand("report", "write convergence CSVs for a run");
    report->add_option("--run", run_dir, "run directory")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: usage: " << one_line(e.what()) << "\n";
        return kExitUsage;
    }

    try {
        if (*gen) return cmd_gen_instances(category, role, gen_seed, gen_out, out);
        if (*evolve) return cmd_evolve(config_file, force, out);
        if (*eval) return cmd_eval_operator(operator_file, eval_opts, worker, step_timeout, with_baseline, out);
        if (*baseline) return cmd_baseline(algorithm, base_opts, out);
        if (*report) return cmd_report(run_dir, out);
    } catch (const CliFailure& f) {
        err << "error: " << f.kind << ": " << one_line(f.message) << "\n";
        return f.code;
    } catch (const std::exception& e) {
        err << "error: aborted: " << one_line(e.what()) << "\n";
        return kExitAborted;
    }
    return kExitUsage;
}

} // namespace opevo::cli
