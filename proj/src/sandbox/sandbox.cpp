#include "opevo/sandbox/sandbox.hpp"

#include <algorithm>
#include <cmath>

#include "opevo/llm/extract.hpp"
#include "opevo/variation.hpp"

namespace opevo::sandbox {

using nlohmann::json;

std::string_view to_string(Origin o) {
    switch (o) {
    case Origin::Init: return "init";
    case Origin::Crossover: return "crossover";
    case Origin::Mutation: return "mutation";
    case Origin::Repair: return "repair";
    }
    return "?";
}

Origin parse_origin(std::string_view s) {
    for (auto o : {Origin::Init, Origin::Crossover, Origin::Mutation, Origin::Repair})
        if (s == to_string(o)) return o;
    throw std::invalid_argument("unknown operator origin '" + std::string(s) + "'");
}

void OperatorArtifact::validate() const {
    if (id.empty()) throw std::invalid_argument("operator artifact without id");
    if (source.empty()) throw std::invalid_argument("operator artifact " + id + " has empty source");
}

json artifact_meta_json(const OperatorArtifact& a) {
    return {{"id", a.id},
            {"origin", std::string(to_string(a.origin))},
            {"parents", a.parents},
            {"created_generation", a.created_generation}};
}

void WorkerSpec::validate() const {
    if (command.empty()) throw std::invalid_argument("worker command is empty");
    if (!(max_pilot_seconds > 0)) throw std::invalid_argument("MaxT must be positive");
    if (!(step_timeout_seconds > 0)) throw std::invalid_argument("step timeout must be positive");
    if (pilot_population < 2 || pilot_generations < 1) throw std::invalid_argument("pilot budget too small");
}

json problem_meta(const ProblemInstance& inst) {
    json meta{{"category", std::string(to_string(inst.category))},
              {"encoding", std::string(to_string(inst.encoding))},
              {"n_var", inst.n_var},
              {"k", inst.k},
              {"orientation", inst.orientation() == Orientation::Maximize ? "maximize" : "minimize"},
              {"objective_bounds", {{"ideal", inst.bounds.ideal}, {"nadir", inst.bounds.nadir}}}};
    if (inst.encoding == Encoding::Real) {
        meta["lower"] = inst.lower;
        meta["upper"] = inst.upper;
    }
    if (inst.category == Category::MOKP) {
        meta["weights"] = inst.mokp().weights;
        meta["capacity"] = inst.mokp().capacity;
    }
    if (inst.category == Category::MOTSP) meta["closed_tour"] = inst.motsp().closed_tour;
    return meta;
}

namespace {

// JSON-safe integer range for seeds on the wire.
constexpr std::uint64_t kSeedMask = (std::uint64_t{1} << 53) - 1;

struct SessionFailure {
    bool timeout = false;
    std::string message;
};

class Session {
public:
    Session(const ProblemInstance& inst, const WorkerSpec& spec, const SessionOptions& opt)
        : inst_(inst), opt_(opt), worker_(WorkerProcess::spawn(spec.command, spec.stderr_cap)) {}

    ~Session() { worker_.terminate(); }

    Clock::time_point deadline() const {
        auto d = Clock::time_point::max();
        if (opt_.per_call_seconds)
            d = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(*opt_.per_call_seconds));
        if (opt_.deadline) d = std::min(d, *opt_.deadline);
        return d;
    }

    void send(const json& msg) {
        auto d = deadline();
        switch (worker_.write_line(msg.dump(), d)) {
        case WorkerProcess::Io::Ok: return;
        case WorkerProcess::Io::Timeout: throw SessionFailure{true, {}};
        case WorkerProcess::Io::Closed: throw SessionFailure{false, died()};
        }
    }

    json receive(const char* expected_phase) {
        std::string line;
        switch (worker_.read_line(line, deadline())) {
        case WorkerProcess::Io::Ok: break;
        case WorkerProcess::Io::Timeout: throw SessionFailure{true, {}};
        case WorkerProcess::Io::Closed: throw SessionFailure{false, died()};
        }
        json reply;
        try {
            reply = json::parse(line);
        } catch (const json::exception&) {
            throw SessionFailure{false, violation("reply is not JSON: " + line.substr(0, 200))};
        }
        if (!reply.is_object() || !reply.contains("type") || !reply["type"].is_string())
            throw SessionFailure{false, violation("reply has no string 'type' field")};
        if (reply["type"] == "error") {
            std::string phase = reply.value("phase", std::string(expected_phase));
            std::string text = phase + " error: " + text_field(reply, "message");
            const std::string tb = text_field(reply, "traceback");
            if (!tb.empty()) text += "\n" + tb;
            throw SessionFailure{false, with_stderr(text)};
        }
        return reply;
    }

    std::string violation(const std::string& what) { return with_stderr("protocol violation: " + what); }
    std::string malformed(const std::string& what) { return with_stderr("malformed offspring: " + what); }

    std::string with_stderr(std::string text) {
        const std::string& err = worker_.stderr_text();
        if (!err.empty()) text += "\nworker stderr:\n" + err;
        return text;
    }

    std::string died() {
        worker_.terminate();
        return with_stderr("worker exited unexpectedly (" + worker_.describe_exit() + ")");
    }

    void shutdown() {
        try {
            worker_.write_line(json{{"type", "shutdown"}}.dump(), Clock::now() + std::chrono::milliseconds(200));
        } catch (...) {
        }
        worker_.terminate();
    }

private:
    static std::string text_field(const json& j, const char* key) {
        if (!j.contains(key)) return {};
        return j[key].is_string() ? j[key].get<std::string>() : j[key].dump();
    }

    const ProblemInstance& inst_;
    const SessionOptions& opt_;
    WorkerProcess worker_;
};

Point minimized(const ProblemInstance& inst, const Genome& g) { return to_minimization(evaluate(inst, g)); }

double front_metric(const InstanceScorer& scorer, const std::vector<Point>& objs) {
    return scorer.metric(nondominated_filter(objs));
}

/// Decodes and checks one offspring genome; reals are clipped into the box.
Genome decode_offspring(const ProblemInstance& inst, const json& j) {
    Genome g = genome_from_json(j, inst.encoding);
    if (genome_size(g) != inst.n_var)
        throw std::invalid_argument("genome length " + std::to_string(genome_size(g)) + ", expected " +
                                    std::to_string(inst.n_var));
    if (auto* r = std::get_if<RealGenome>(&g))
        for (std::size_t i = 0; i < inst.n_var; ++i) r->values[i] = std::clamp(r->values[i], inst.lower[i], inst.upper[i]);
    check_genome(inst, g);
    return g;
}

json objectives_json(const ProblemInstance& inst, const std::vector<Point>& objs) {
    // The worker sees objectives on the problem's own scale.
    json out = json::array();
    const bool negate = inst.orientation() == Orientation::Maximize;
    for (const auto& p : objs) {
        json row = json::array();
        for (double v : p) row.push_back(negate ? -v : v);
        out.push_back(std::move(row));
    }
    return out;
}

} // namespace

SessionResult run_session(const std::string& source, const ProblemInstance& inst, const InstanceScorer* scorer,
                          const WorkerSpec& spec, const SessionOptions& opt, const GenerationObserver& observer) {
    SessionResult result;
    const std::size_t n = opt.population_size;
    Session session(inst, spec, opt);
    try {
        session.send({{"type", "load"}, {"operator_source", source}, {"problem_meta", problem_meta(inst)}});
        json reply = session.receive("load");
        if (reply["type"] != "ready")
            throw SessionFailure{false, session.violation("expected 'ready', got '" + reply["type"].get<std::string>() + "'")};

        Rng rng(opt.seed);
        std::vector<Genome>& pop = result.population;
        std::vector<Point>& objs = result.objectives;
        for (std::size_t i = 0; i < n; ++i) {
            Genome g = random_genome(inst, rng);
            if (inst.category == Category::MOKP) variation::rand_weight_repair(inst, std::get<BitGenome>(g), rng);
            objs.push_back(minimized(inst, g));
            pop.push_back(std::move(g));
        }
        if (scorer) result.trace.push_back(front_metric(*scorer, objs));
        if (observer) observer(0, pop, objs);

        for (std::size_t gen = 1; gen <= opt.generations; ++gen) {
            json parents = json::array();
            for (const auto& g : pop) parents.push_back(genome_to_json(g));
            session.send({{"type", "step"},
                          {"seed", derive_seed(opt.seed, gen) & kSeedMask},
                          {"parents", std::move(parents)},
                          {"parent_objectives", objectives_json(inst, objs)}});
            reply = session.receive("step");
            if (reply["type"] != "offspring")
                throw SessionFailure{false,
                                     session.violation("expected 'offspring', got '" + reply["type"].get<std::string>() + "'")};
            if (!reply.contains("genomes") || !reply["genomes"].is_array())
                throw SessionFailure{false, session.violation("offspring message without a 'genomes' array")};
            const json& genomes = reply["genomes"];
            if (genomes.size() != n)
                throw SessionFailure{false, session.malformed("expected " + std::to_string(n) + " offspring, got " +
                                                              std::to_string(genomes.size()))};

            std::vector<Genome> merged = pop;
            std::vector<Point> merged_objs = objs;
            for (std::size_t i = 0; i < n; ++i) {
                Genome child;
                try {
                    child = decode_offspring(inst, genomes[i]);
                } catch (const std::invalid_argument& e) {
                    throw SessionFailure{false, session.malformed("offspring " + std::to_string(i) + ": " + e.what())};
                }
                if (inst.category == Category::MOKP) variation::rand_weight_repair(inst, std::get<BitGenome>(child), rng);
                try {
                    merged_objs.push_back(minimized(inst, child));
                } catch (const EvaluationError& e) {
                    throw SessionFailure{false, session.malformed("offspring " + std::to_string(i) + ": " + e.what())};
                }
                merged.push_back(std::move(child));
            }
            const auto keep = select_survivors(merged_objs, n);
            std::vector<Genome> next;
            std::vector<Point> next_objs;
            for (std::size_t idx : keep) {
                next.push_back(std::move(merged[idx]));
                next_objs.push_back(std::move(merged_objs[idx]));
            }
            pop = std::move(next);
            objs = std::move(next_objs);
            if (scorer) result.trace.push_back(front_metric(*scorer, objs));
            if (observer) observer(gen, pop, objs);
        }
        session.shutdown();
        result.ok = true;
    } catch (const SessionFailure& f) {
        result.ok = false;
        result.timed_out = f.timeout;
        result.error = f.message;
        if (!f.timeout && result.error.empty()) result.error = "worker failure";
    }
    return result;
}

PilotOutcome pilot_run(const OperatorArtifact& op, const SuiteSpec& toy, const WorkerSpec& spec) {
    if (toy.instances.empty()) throw std::invalid_argument("pilot run needs at least one toy problem");
    spec.validate();
    const auto start = Clock::now();
    SessionOptions opt;
    opt.population_size = spec.pilot_population;
    opt.generations = spec.pilot_generations;
    opt.deadline = start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(spec.max_pilot_seconds));

    PilotOutcome out;
    out.state = true;
    for (const auto& inst : toy.instances) {
        opt.seed = inst.seed;
        SessionResult r = run_session(op.source, inst, nullptr, spec, opt);
        if (!r.ok) {
            out.state = false;
            if (!r.timed_out) out.error = r.error;
            break;
        }
    }
    out.elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    return out;
}

namespace {

std::string tagged(const std::string& source) {
    return std::string(llm::kOpenTag) + "\n" + source + "\n" + std::string(llm::kCloseTag);
}

} // namespace

RepairOutcome repair_loop(const OperatorArtifact& op, const SuiteSpec& toy, const WorkerSpec& spec,
                          llm::Backend& backend, int n_trial, llm::ChatTranscript& dialogue,
                          const llm::PromptContext& context, const IdFactory& next_id) {
    if (n_trial < 1) throw std::invalid_argument("N_trial must be at least 1");
    op.validate();

    RepairOutcome out;
    OperatorArtifact current = op;
    std::string error;
    bool skip_pilot = false;

    if (dialogue.messages().empty() || dialogue.messages().back().role != llm::Role::Assistant)
        dialogue.append(llm::Role::Assistant, tagged(current.source));

    for (int trial = 0; trial < n_trial; ++trial) {
        if (!skip_pilot) {
            PilotOutcome p = pilot_run(current, toy, spec);
            ++out.pilot_runs;
            out.pilots.push_back(p);
            if (p.state) {
                out.artifact = current;
                return out;
            }
            if (p.error.empty()) {
                out.failure = "pilot run exceeded MaxT";
                out.timed_out = true;
                return out;
            }
            error = p.error;
        }
        skip_pilot = false;

        llm::PromptContext ctx = context;
        ctx.error_text = error;
        try {
            llm::append_repair(dialogue, ctx);
        } catch (const llm::PromptError&) {
            // Over budget: restart the dialogue from the current candidate.
            llm::ChatTranscript fresh(llm::PromptKind::Repair, dialogue.temperature());
            fresh.set_backend_id(dialogue.backend_id());
            fresh.append(llm::Role::Assistant, tagged(current.source));
            llm::append_repair(fresh, ctx);
            dialogue = std::move(fresh);
        }

        ++out.llm_calls;
        try {
            std::string reply = backend.complete(dialogue);
            dialogue.append(llm::Role::Assistant, reply.empty() ? std::string("(empty response)") : reply);
            std::string source = llm::extract_operator(reply);
            OperatorArtifact repaired;
            repaired.id = next_id();
            repaired.source = std::move(source);
            repaired.origin = Origin::Repair;
            repaired.parents = {current.id};
            repaired.created_generation = current.created_generation;
            out.repaired.push_back(repaired);
            current = std::move(repaired);
        } catch (const llm::BackendError& e) {
            error = std::string("model request failed: ") + e.what();
            skip_pilot = true;
        } catch (const llm::ExtractError& e) {
            error = std::string("could not extract the operator from the response: ") + e.what();
            skip_pilot = true;
        }
    }
    out.failure = "repair trials exhausted";
    return out;
}

EvaluationResult evaluate_operator(const OperatorArtifact& op, const InstanceScorer& scorer, const WorkerSpec& spec,
                                   const EvalBudget& budget, std::uint64_t seed, const GenerationObserver& observer) {
    EvaluationResult out;
    const ProblemInstance& inst = scorer.instance();
    out.instance_id = inst.id;
    out.front.instance_id = inst.id;

    SessionOptions opt;
    opt.population_size = budget.population_size;
    opt.generations = budget.generations;
    opt.seed = seed;
    opt.per_call_seconds = spec.step_timeout_seconds;

    SessionResult r;
    try {
        r = run_session(op.source, inst, &scorer, spec, opt, observer);
    } catch (const WorkerLaunchError& e) {
        out.failure = std::string("worker launch failed: ") + e.what();
        return out;
    }
    out.trace = std::move(r.trace);
    if (!r.ok) {
        out.failure = r.timed_out ? "timeout: no worker reply within " + std::to_string(spec.step_timeout_seconds) + "s"
                                  : r.error;
        return out;
    }
    out.front.points = nondominated_filter(r.objectives);
    out.metric = scorer.metric(out.front.points);
    out.ps = problem_score(inst.category, *out.metric);
    return out;
}

} // namespace opevo::sandbox
