#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "opevo/metrics.hpp"
#include "opevo/problems.hpp"

namespace opevo {

/// Partition into fronts F1, F2, ... of indices (ascending within a front).
std::vector<std::vector<std::size_t>> fast_nondominated_sort(const std::vector<Point>& objectives);

/// Crowding distance of each member of one front; boundary points get +inf.
std::vector<double> crowding_distance(const std::vector<Point>& objectives, const std::vector<std::size_t>& front);

/// Rank (front index) and crowding distance for a whole population.
struct RankedPopulation {
    std::vector<std::size_t> rank;
    std::vector<double> crowding;
};
RankedPopulation rank_population(const std::vector<Point>& objectives);

/// Indices of the `keep` survivors: whole fronts first, the splitting front
/// truncated by descending crowding distance.
std::vector<std::size_t> select_survivors(const std::vector<Point>& objectives, std::size_t keep);

struct SolverConfig {
    std::size_t population_size = 100;
    std::size_t generations = 200;
    double crossover_probability = 0.9;
    double sbx_eta = 15.0;
    double pm_eta = 20.0;
    /// Per-variable mutation rate; <= 0 means 1 / n_var.
    double mutation_rate = -1.0;

    void validate() const;
};

/// Called after each survival step with the generation index (0 = initial
/// population), genomes, and minimization-oriented objectives.
using GenerationObserver =
    std::function<void(std::size_t generation, const std::vector<Genome>&, const std::vector<Point>&)>;

struct SolverResult {
    FrontApproximation front;
    /// Per-generation indicator of the current nondominated set; entry 0 is
    /// the initial population, so size is generations + 1.
    std::vector<double> trace;
    std::vector<Genome> final_population;
};

SolverResult nsga2_run(const ProblemInstance& instance, const SolverConfig& config, std::uint64_t seed,
                       const GenerationObserver& observer = {});

/// Same, reusing a scorer whose reference front is already built.
SolverResult nsga2_run(const InstanceScorer& scorer, const SolverConfig& config, std::uint64_t seed,
                       const GenerationObserver& observer = {});

} // namespace opevo
