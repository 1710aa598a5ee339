#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "opevo/llm/backend.hpp"
#include "opevo/metrics.hpp"
#include "opevo/problems.hpp"
#include "opevo/sandbox/sandbox.hpp"

namespace opevo::evolution {

class ConfigError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// An initialization slot could not be filled within the attempt cap.
class InitializationAborted : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EvolutionConfig {
    std::size_t n_ev = 10;
    std::size_t g_ev = 10;
    /// Largest number of parents per crossover; unset means max(2, n_ev / 2).
    std::optional<std::size_t> n_max;
    double temperature = 0.5;
    int n_trial = 2;
    sandbox::EvalBudget budget{100, 200};
    Category category = Category::CMOP;
    std::uint64_t run_seed = 0;
    int attempt_cap = 10;
    /// Concurrent evaluations per operator; 0 means one per suite instance.
    std::size_t pool_size = 0;
    sandbox::WorkerSpec worker;

    std::size_t effective_n_max() const;
    void validate() const;
};

struct OperatorCandidate {
    sandbox::OperatorArtifact artifact;
    std::optional<ScoreReport> report;
    int generation_admitted = 0;

    double score() const { return report ? report->aggregate : 0.0; }
};

inline constexpr double kProbabilityFloor = 1e-6;

/// Softmax of the scores (max-subtracted), each unnormalized weight floored
/// at kProbabilityFloor before normalization.
std::vector<double> selection_probabilities(std::span<const double> scores);

/// Indices of n_s distinct candidates drawn without replacement, the
/// remaining weights renormalized after each draw.
std::vector<std::size_t> sample_parents(std::span<const double> probs, std::size_t n_s, Rng& rng);

/// Union, stable sort by descending score (incumbents ahead of the newcomer
/// on ties), truncate to the previous population size.
std::vector<OperatorCandidate> elitist_update(std::vector<OperatorCandidate> population, OperatorCandidate newcomer);

struct EvaluatedOperator {
    ScoreReport report;
    std::vector<sandbox::EvaluationResult> results;
};

/// Persistence and logging callbacks; all are optional and invoked from
/// the orchestrating thread.
struct EvolutionHooks {
    /// A new artifact exists. stage: generated, repaired, fallback.
    std::function<void(const sandbox::OperatorArtifact&, const std::string& stage)> artifact;
    std::function<void(const OperatorCandidate&, const std::vector<sandbox::EvaluationResult>&)> scored;
    std::function<void(const std::string& type, const nlohmann::json& data)> event;
    /// After initialization (generation 0) and after each generation.
    std::function<void(std::size_t generation, const std::vector<OperatorCandidate>& population)> generation;
};

struct EvolutionResult {
    OperatorCandidate best;
    /// Best score after initialization and after each generation.
    std::vector<double> trace;
    std::vector<OperatorCandidate> population;
    std::size_t llm_calls = 0;
    std::size_t scored_operators = 0;
};

/// Seed of one (operator, instance) evaluation.
std::uint64_t evaluation_seed(std::uint64_t run_seed, const std::string& operator_id, const std::string& instance_id);

/// Scores an operator on every instance of a suite concurrently.
EvaluatedOperator parallel_evaluate(const sandbox::OperatorArtifact& op, const std::vector<InstanceScorer>& scorers,
                                    const EvolutionConfig& config);

class Evolver {
public:
    Evolver(EvolutionConfig config, SuiteSpec suite, llm::Backend& backend, EvolutionHooks hooks = {});

    std::vector<OperatorCandidate> initialize_population();

    /// Crossover of the given parents; falls back to a clone of the best
    /// parent when every attempt fails.
    sandbox::OperatorArtifact crossover_step(const std::vector<OperatorCandidate>& parents, int generation);

    /// Mutates when gate_draw < 1 / n_ev; otherwise returns the input.
    sandbox::OperatorArtifact mutation_step(const sandbox::OperatorArtifact& input, int generation, double gate_draw);
    sandbox::OperatorArtifact mutation_step(const sandbox::OperatorArtifact& input, int generation);

    OperatorCandidate score(const sandbox::OperatorArtifact& op, int generation);

    EvolutionResult run();

    std::size_t llm_calls() const { return llm_calls_; }
    const std::vector<InstanceScorer>& scorers() const { return scorers_; }
    Rng& rng() { return rng_; }

private:
    std::string next_id(int generation);
    std::string complete(llm::ChatTranscript& transcript);
    std::optional<sandbox::OperatorArtifact> generate(llm::ChatTranscript transcript, sandbox::Origin origin,
                                                      std::vector<std::string> parents, int generation);
    void emit(const std::string& type, const nlohmann::json& data);

    EvolutionConfig config_;
    SuiteSpec suite_;
    SuiteSpec toy_;
    std::vector<InstanceScorer> scorers_;
    llm::Backend& backend_;
    EvolutionHooks hooks_;
    llm::PromptContext context_;
    Rng rng_;
    std::size_t llm_calls_ = 0;
    std::size_t scored_ = 0;
    std::map<int, int> id_counters_;
};

/// Runs the whole operator evolution.
EvolutionResult evolve(const EvolutionConfig& config, const SuiteSpec& suite, llm::Backend& backend,
                       EvolutionHooks hooks = {});

} // namespace opevo::evolution
