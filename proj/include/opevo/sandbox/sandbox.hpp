#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "opevo/llm/backend.hpp"
#include "opevo/llm/prompts.hpp"
#include "opevo/metrics.hpp"
#include "opevo/nsga2.hpp"
#include "opevo/problems.hpp"
#include "opevo/sandbox/process.hpp"

namespace opevo::sandbox {

enum class Origin { Init, Crossover, Mutation, Repair };
std::string_view to_string(Origin o);
Origin parse_origin(std::string_view s);

struct OperatorArtifact {
    std::string id;
    std::string source;
    Origin origin = Origin::Init;
    std::vector<std::string> parents;
    int created_generation = 0;

    void validate() const;
};

nlohmann::json artifact_meta_json(const OperatorArtifact& a);

struct WorkerSpec {
    /// argv of the worker; the first entry is resolved against PATH.
    std::vector<std::string> command;
    /// Reply deadline for each message during full evaluations.
    double step_timeout_seconds = 10.0;
    /// Wall-clock budget of one pilot run (all toy problems together).
    double max_pilot_seconds = 2000.0;
    std::size_t stderr_cap = 20000;
    std::size_t pilot_population = 20;
    std::size_t pilot_generations = 5;

    void validate() const;
};

struct PilotOutcome {
    bool state = false;
    std::string error;
    double elapsed = 0.0;
};

/// The problem description sent to the worker with the operator source.
nlohmann::json problem_meta(const ProblemInstance& instance);

/// One worker session: load the operator, then iterate step / evaluate /
/// survive for the given number of generations.
struct SessionOptions {
    std::size_t population_size = 20;
    std::size_t generations = 5;
    std::uint64_t seed = 0;
    /// Reply deadline per message, if any.
    std::optional<double> per_call_seconds;
    /// Deadline for the whole session, if any.
    std::optional<Clock::time_point> deadline;
};

struct SessionResult {
    bool ok = false;
    bool timed_out = false;
    /// Diagnostic with the worker's message, traceback and stderr; empty on
    /// success and on timeouts.
    std::string error;
    /// Minimization-oriented objectives of the final population.
    std::vector<Point> objectives;
    std::vector<Genome> population;
    /// Metric of the nondominated set after each generation (entry 0 is the
    /// initial population). Filled only when a scorer is given.
    std::vector<double> trace;
};

/// Throws WorkerLaunchError when the worker cannot be started.
SessionResult run_session(const std::string& source, const ProblemInstance& instance, const InstanceScorer* scorer,
                          const WorkerSpec& spec, const SessionOptions& options,
                          const GenerationObserver& observer = {});

/// Miniature evolution on each toy problem under the aggregate MaxT budget.
/// Throws WorkerLaunchError when the worker cannot be started.
PilotOutcome pilot_run(const OperatorArtifact& op, const SuiteSpec& toy_problems, const WorkerSpec& spec);

using IdFactory = std::function<std::string()>;

struct RepairOutcome {
    std::optional<OperatorArtifact> artifact;
    std::size_t pilot_runs = 0;
    std::size_t llm_calls = 0;
    /// Every candidate produced by a repair call, in order.
    std::vector<OperatorArtifact> repaired;
    std::vector<PilotOutcome> pilots;
    /// Why no artifact was returned.
    std::string failure;
    bool timed_out = false;
};

/// Pilot run and repair. `dialogue` is the transcript that produced `op`;
/// repair requests are appended to it. `context` provides the problem name.
RepairOutcome repair_loop(const OperatorArtifact& op, const SuiteSpec& toy_problems, const WorkerSpec& spec,
                          llm::Backend& backend, int n_trial, llm::ChatTranscript& dialogue,
                          const llm::PromptContext& context, const IdFactory& next_id);

struct EvalBudget {
    std::size_t population_size = 100;
    std::size_t generations = 200;
};

struct EvaluationResult {
    std::string instance_id;
    double ps = 0.0;
    std::optional<double> metric;
    FrontApproximation front;
    std::vector<double> trace;
    std::string failure;

    bool ok() const { return failure.empty(); }
};

/// Full-budget run of the operator on one instance. Any failure yields PS 0
/// with the reason recorded.
EvaluationResult evaluate_operator(const OperatorArtifact& op, const InstanceScorer& scorer, const WorkerSpec& spec,
                                   const EvalBudget& budget, std::uint64_t seed,
                                   const GenerationObserver& observer = {});

} // namespace opevo::sandbox
