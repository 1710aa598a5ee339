#include "opevo/evolution.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

#include "opevo/llm/extract.hpp"
#include "opevo/llm/prompts.hpp"

namespace opevo::evolution {

using nlohmann::json;
using sandbox::OperatorArtifact;
using sandbox::Origin;

std::size_t EvolutionConfig::effective_n_max() const { return n_max ? *n_max : std::max<std::size_t>(2, n_ev / 2); }

void EvolutionConfig::validate() const {
    if (n_ev < 2) throw ConfigError("N_ev must be at least 2");
    if (g_ev < 1) throw ConfigError("G_ev must be at least 1");
    const std::size_t nm = effective_n_max();
    if (nm < 2 || nm > n_ev) throw ConfigError("N_max must lie in [2, N_ev]");
    if (n_trial < 1) throw ConfigError("N_trial must be at least 1");
    if (attempt_cap < 1) throw ConfigError("attempt cap must be at least 1");
    if (!(temperature >= 0.0)) throw ConfigError("temperature must be nonnegative");
    if (budget.population_size < 2 || budget.generations < 1) throw ConfigError("inner budget too small");
    try {
        worker.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

std::vector<double> selection_probabilities(std::span<const double> scores) {
    if (scores.empty()) throw std::invalid_argument("selection over an empty population");
    const double top = *std::max_element(scores.begin(), scores.end());
    std::vector<double> w(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) w[i] = std::max(std::exp(scores[i] - top), kProbabilityFloor);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= total;
    return w;
}

std::vector<std::size_t> sample_parents(std::span<const double> probs, std::size_t n_s, Rng& rng) {
    if (n_s > probs.size()) throw std::invalid_argument("N_s exceeds the population size");
    std::vector<double> w(probs.begin(), probs.end());
    for (double& x : w) x = std::max(x, kProbabilityFloor);
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < n_s; ++k) {
        double total = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) total += w[i];
        double r = uniform01(rng) * total;
        std::size_t pick = w.size();
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (w[i] == 0.0) continue;
            pick = i;
            if (r < w[i]) break;
            r -= w[i];
        }
        out.push_back(pick);
        w[pick] = 0.0;
    }
    return out;
}

std::vector<OperatorCandidate> elitist_update(std::vector<OperatorCandidate> population, OperatorCandidate newcomer) {
    const std::size_t size = population.size();
    population.push_back(std::move(newcomer));
    std::stable_sort(population.begin(), population.end(),
                     [](const OperatorCandidate& a, const OperatorCandidate& b) { return a.score() > b.score(); });
    population.resize(size);
    return population;
}

std::uint64_t evaluation_seed(std::uint64_t run_seed, const std::string& operator_id, const std::string& instance_id) {
    return StableHash{}.add(run_seed).add(operator_id).add(instance_id).value();
}

EvaluatedOperator parallel_evaluate(const OperatorArtifact& op, const std::vector<InstanceScorer>& scorers,
                                    const EvolutionConfig& config) {
    EvaluatedOperator out;
    out.results.resize(scorers.size());
    const std::size_t pool = std::max<std::size_t>(1, std::min(config.pool_size ? config.pool_size : scorers.size(),
                                                                scorers.size()));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < scorers.size();) {
            const auto seed = evaluation_seed(config.run_seed, op.id, scorers[i].instance().id);
            out.results[i] = sandbox::evaluate_operator(op, scorers[i], config.worker, config.budget, seed);
        }
    };
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < pool; ++t) threads.emplace_back(work);
    work();
    for (auto& t : threads) t.join();

    std::map<std::string, double> ps;
    for (const auto& r : out.results) ps[r.instance_id] = r.ps;
    out.report = ScoreReport::from(std::move(ps));
    return out;
}

Evolver::Evolver(EvolutionConfig config, SuiteSpec suite, llm::Backend& backend, EvolutionHooks hooks)
    : config_(std::move(config)),
      suite_(std::move(suite)),
      toy_(make_toy_suite(config_.category)),
      backend_(backend),
      hooks_(std::move(hooks)),
      context_(llm::context_for(config_.category)),
      rng_(derive_seed(config_.run_seed, 0x65766f6cULL)) {
    config_.validate();
    if (suite_.instances.empty()) throw ConfigError("validation suite is empty");
    if (suite_.category != config_.category) throw ConfigError("validation suite category differs from the run category");
    context_.temperature = config_.temperature;
    for (const auto& inst : suite_.instances) scorers_.emplace_back(inst);
}

std::string Evolver::next_id(int generation) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "g%02d_op%02d", generation, id_counters_[generation]++);
    return buf;
}

void Evolver::emit(const std::string& type, const json& data) {
    if (hooks_.event) hooks_.event(type, data);
}

std::string Evolver::complete(llm::ChatTranscript& transcript) {
    ++llm_calls_;
    transcript.set_backend_id(backend_.id());
    return backend_.complete(transcript);
}

// One pass of generate -> extract -> pilot/repair. Returns nothing when the
// pass fails.
std::optional<OperatorArtifact> Evolver::generate(llm::ChatTranscript transcript, Origin origin,
                                                  std::vector<std::string> parents, int generation) {
    const std::string kind(llm::to_string(transcript.kind()));
    std::string reply;
    try {
        reply = complete(transcript);
    } catch (const llm::BackendError& e) {
        emit("backend_error", {{"prompt", kind}, {"message", e.what()}});
        return std::nullopt;
    }
    transcript.append(llm::Role::Assistant, reply.empty() ? std::string("(empty response)") : reply);
    OperatorArtifact art;
    try {
        art.source = llm::extract_operator(reply);
    } catch (const llm::ExtractError& e) {
        emit("extract_error", {{"prompt", kind}, {"message", e.what()}});
        return std::nullopt;
    }
    art.id = next_id(generation);
    art.origin = origin;
    art.parents = std::move(parents);
    art.created_generation = generation;
    if (hooks_.artifact) hooks_.artifact(art, "generated");

    auto ids = [this, generation] { return next_id(generation); };
    const std::size_t calls_before = llm_calls_;
    // Repair requests go through the same counting path.
    struct Counting final : llm::Backend {
        Evolver& self;
        explicit Counting(Evolver& s) : self(s) {}
        std::string complete(const llm::ChatTranscript& t) override {
            ++self.llm_calls_;
            return self.backend_.complete(t);
        }
        std::string id() const override { return self.backend_.id(); }
    } counting(*this);

    auto rep = sandbox::repair_loop(art, toy_, config_.worker, counting, config_.n_trial, transcript, context_, ids);
    for (const auto& r : rep.repaired)
        if (hooks_.artifact) hooks_.artifact(r, "repaired");
    json info{{"operator", art.id},
              {"pilot_runs", rep.pilot_runs},
              {"repair_calls", llm_calls_ - calls_before}};
    if (rep.artifact) {
        info["validated"] = rep.artifact->id;
        emit("pilot_passed", info);
        return rep.artifact;
    }
    info["reason"] = rep.failure;
    if (!rep.pilots.empty()) info["last_error"] = rep.pilots.back().error.substr(0, 500);
    emit(rep.timed_out ? "pilot_timeout" : "repair_failed", info);
    return std::nullopt;
}

OperatorCandidate Evolver::score(const OperatorArtifact& op, int generation) {
    auto eval = parallel_evaluate(op, scorers_, config_);
    OperatorCandidate c{op, eval.report, generation};
    for (const auto& r : eval.results)
        if (!r.ok()) emit("evaluation_failed", {{"operator", op.id}, {"instance", r.instance_id}, {"reason", r.failure.substr(0, 500)}});
    ++scored_;
    if (hooks_.scored) hooks_.scored(c, eval.results);
    return c;
}

std::vector<OperatorCandidate> Evolver::initialize_population() {
    std::vector<OperatorCandidate> population;
    for (std::size_t slot = 0; slot < config_.n_ev; ++slot) {
        std::optional<OperatorArtifact> art;
        for (int attempt = 1; attempt <= config_.attempt_cap && !art; ++attempt)
            art = generate(llm::render_initialization(context_), Origin::Init, {}, 0);
        if (!art) {
            emit("initialization_aborted", {{"slot", slot}, {"attempts", config_.attempt_cap}});
            throw InitializationAborted("initialization slot " + std::to_string(slot + 1) + " not filled after " +
                                        std::to_string(config_.attempt_cap) + " attempts");
        }
        population.push_back(score(*art, 0));
    }
    std::stable_sort(population.begin(), population.end(),
                     [](const OperatorCandidate& a, const OperatorCandidate& b) { return a.score() > b.score(); });
    return population;
}

OperatorArtifact Evolver::crossover_step(const std::vector<OperatorCandidate>& parents, int generation) {
    if (parents.size() < 2) throw std::invalid_argument("crossover needs at least two parents");
    llm::PromptContext ctx = context_;
    std::vector<std::string> ids;
    for (const auto& p : parents) {
        ctx.selected.push_back({p.artifact.source, p.score()});
        ids.push_back(p.artifact.id);
    }
    ctx.n_selected = parents.size();
    for (int attempt = 1; attempt <= config_.attempt_cap; ++attempt) {
        llm::ChatTranscript t(llm::PromptKind::Crossover);
        try {
            t = llm::render_crossover(ctx);
        } catch (const llm::PromptError& e) {
            emit("prompt_error", {{"prompt", "crossover"}, {"message", e.what()}});
            break;
        }
        if (auto art = generate(std::move(t), Origin::Crossover, ids, generation)) return *art;
    }
    const auto best = std::max_element(parents.begin(), parents.end(), [](const auto& a, const auto& b) {
        return a.score() < b.score();
    });
    OperatorArtifact clone = best->artifact;
    clone.id = next_id(generation);
    clone.origin = Origin::Crossover;
    clone.parents = {best->artifact.id};
    clone.created_generation = generation;
    if (hooks_.artifact) hooks_.artifact(clone, "fallback");
    emit("fallback", {{"step", "crossover"}, {"operator", clone.id}, {"cloned", best->artifact.id}});
    return clone;
}

OperatorArtifact Evolver::mutation_step(const OperatorArtifact& input, int generation, double gate_draw) {
    if (!(gate_draw < 1.0 / static_cast<double>(config_.n_ev))) return input;
    llm::PromptContext ctx = context_;
    ctx.operator_source = input.source;
    for (int attempt = 1; attempt <= config_.attempt_cap; ++attempt) {
        if (auto art = generate(llm::render_mutation(ctx), Origin::Mutation, {input.id}, generation)) return *art;
    }
    emit("fallback", {{"step", "mutation"}, {"operator", input.id}});
    return input;
}

OperatorArtifact Evolver::mutation_step(const OperatorArtifact& input, int generation) {
    return mutation_step(input, generation, uniform01(rng_));
}

EvolutionResult Evolver::run() {
    EvolutionResult result;
    auto population = initialize_population();
    result.trace.push_back(population.front().score());
    if (hooks_.generation) hooks_.generation(0, population);

    const std::size_t n_max = std::min(config_.effective_n_max(), population.size());
    for (std::size_t gen = 1; gen <= config_.g_ev; ++gen) {
        const int g = static_cast<int>(gen);
        for (std::size_t it = 0; it < config_.n_ev; ++it) {
            std::vector<double> scores;
            for (const auto& c : population) scores.push_back(c.score());
            const auto probs = selection_probabilities(scores);
            const std::size_t n_s = 2 + uniform_index(rng_, n_max - 1);
            std::vector<OperatorCandidate> parents;
            for (std::size_t idx : sample_parents(probs, n_s, rng_)) parents.push_back(population[idx]);

            OperatorArtifact child = crossover_step(parents, g);
            child = mutation_step(child, g);
            OperatorCandidate scored = score(child, g);
            const double worst = population.back().score();
            emit("elitist_update", {{"generation", gen},
                                    {"iteration", it},
                                    {"operator", scored.artifact.id},
                                    {"score", scored.score()},
                                    {"admitted", scored.score() > worst}});
            population = elitist_update(std::move(population), std::move(scored));
        }
        result.trace.push_back(population.front().score());
        if (hooks_.generation) hooks_.generation(gen, population);
    }
    result.best = population.front();
    result.population = std::move(population);
    result.llm_calls = llm_calls_;
    result.scored_operators = scored_;
    return result;
}

EvolutionResult evolve(const EvolutionConfig& config, const SuiteSpec& suite, llm::Backend& backend,
                       EvolutionHooks hooks) {
    return Evolver(config, suite, backend, std::move(hooks)).run();
}

} // namespace opevo::evolution
