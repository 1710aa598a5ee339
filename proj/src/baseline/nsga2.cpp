#include "opevo/nsga2.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "opevo/variation.hpp"

namespace opevo {

std::vector<std::vector<std::size_t>> fast_nondominated_sort(const std::vector<Point>& objectives) {
    const std::size_t n = objectives.size();
    std::vector<std::vector<std::size_t>> dominated_by_me(n);
    std::vector<std::size_t> domination_count(n, 0);
    std::vector<std::vector<std::size_t>> fronts(1);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
            if (dominates(objectives[p], objectives[q])) {
                dominated_by_me[p].push_back(q);
                ++domination_count[q];
            } else if (dominates(objectives[q], objectives[p])) {
                dominated_by_me[q].push_back(p);
                ++domination_count[p];
            }
        }
    }
    for (std::size_t p = 0; p < n; ++p)
        if (domination_count[p] == 0) fronts[0].push_back(p);
    while (!fronts.back().empty()) {
        std::vector<std::size_t> next;
        for (std::size_t p : fronts.back()) {
            for (std::size_t q : dominated_by_me[p])
                if (--domination_count[q] == 0) next.push_back(q);
        }
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(next));
    }
    fronts.pop_back();
    return fronts;
}

std::vector<double> crowding_distance(const std::vector<Point>& objectives, const std::vector<std::size_t>& front) {
    const std::size_t m = front.size();
    std::vector<double> dist(m, 0.0);
    if (m == 0) return dist;
    if (m <= 2) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        return dist;
    }
    const std::size_t k = objectives[front[0]].size();
    std::vector<std::size_t> order(m);
    for (std::size_t obj = 0; obj < k; ++obj) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return objectives[front[a]][obj] < objectives[front[b]][obj]; });
        const double lo = objectives[front[order.front()]][obj];
        const double hi = objectives[front[order.back()]][obj];
        dist[order.front()] = std::numeric_limits<double>::infinity();
        dist[order.back()] = std::numeric_limits<double>::infinity();
        if (hi <= lo) continue;
        for (std::size_t i = 1; i + 1 < m; ++i) {
            const double gap = objectives[front[order[i + 1]]][obj] - objectives[front[order[i - 1]]][obj];
            dist[order[i]] += gap / (hi - lo);
        }
    }
    return dist;
}

RankedPopulation rank_population(const std::vector<Point>& objectives) {
    RankedPopulation r;
    r.rank.assign(objectives.size(), 0);
    r.crowding.assign(objectives.size(), 0.0);
    auto fronts = fast_nondominated_sort(objectives);
    for (std::size_t f = 0; f < fronts.size(); ++f) {
        auto cd = crowding_distance(objectives, fronts[f]);
        for (std::size_t i = 0; i < fronts[f].size(); ++i) {
            r.rank[fronts[f][i]] = f;
            r.crowding[fronts[f][i]] = cd[i];
        }
    }
    return r;
}

std::vector<std::size_t> select_survivors(const std::vector<Point>& objectives, std::size_t keep) {
    std::vector<std::size_t> survivors;
    survivors.reserve(keep);
    for (const auto& front : fast_nondominated_sort(objectives)) {
        if (survivors.size() + front.size() <= keep) {
            survivors.insert(survivors.end(), front.begin(), front.end());
            if (survivors.size() == keep) break;
            continue;
        }
        auto cd = crowding_distance(objectives, front);
        std::vector<std::size_t> order(front.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cd[a] > cd[b]; });
        for (std::size_t i = 0; survivors.size() < keep; ++i) survivors.push_back(front[order[i]]);
        break;
    }
    return survivors;
}

void SolverConfig::validate() const {
    if (population_size < 4 || population_size % 2 != 0)
        throw std::invalid_argument("population_size must be even and >= 4");
    if (generations < 1) throw std::invalid_argument("generations must be >= 1");
}

namespace {

std::size_t binary_tournament(const RankedPopulation& ranked, Rng& rng) {
    const std::size_t n = ranked.rank.size();
    std::size_t a = uniform_index(rng, n);
    std::size_t b = uniform_index(rng, n);
    if (ranked.rank[a] != ranked.rank[b]) return ranked.rank[a] < ranked.rank[b] ? a : b;
    if (ranked.crowding[a] != ranked.crowding[b]) return ranked.crowding[a] > ranked.crowding[b] ? a : b;
    return std::min(a, b);
}

std::pair<Genome, Genome> make_children(const ProblemInstance& inst, const SolverConfig& cfg, const Genome& a,
                                        const Genome& b, Rng& rng) {
    const double rate = cfg.mutation_rate > 0 ? cfg.mutation_rate : 1.0 / static_cast<double>(inst.n_var);
    const bool cross = uniform01(rng) < cfg.crossover_probability;
    switch (inst.encoding) {
    case Encoding::Real: {
        auto pa = std::get<RealGenome>(a);
        auto pb = std::get<RealGenome>(b);
        if (cross) std::tie(pa, pb) = variation::sbx(pa, pb, inst.lower, inst.upper, cfg.sbx_eta, rng);
        variation::polynomial_mutation(pa, inst.lower, inst.upper, cfg.pm_eta, rate, rng);
        variation::polynomial_mutation(pb, inst.lower, inst.upper, cfg.pm_eta, rate, rng);
        return {std::move(pa), std::move(pb)};
    }
    case Encoding::BitString: {
        auto pa = std::get<BitGenome>(a);
        auto pb = std::get<BitGenome>(b);
        if (cross) std::tie(pa, pb) = variation::two_point_crossover(pa, pb, rng);
        variation::bitflip(pa, rate, rng);
        variation::bitflip(pb, rate, rng);
        if (inst.category == Category::MOKP) {
            variation::rand_weight_repair(inst, pa, rng);
            variation::rand_weight_repair(inst, pb, rng);
        }
        return {std::move(pa), std::move(pb)};
    }
    case Encoding::Permutation: {
        auto pa = std::get<PermGenome>(a);
        auto pb = std::get<PermGenome>(b);
        if (cross) std::tie(pa, pb) = variation::order_crossover(pa, pb, rng);
        variation::inversion_mutation(pa, rng);
        variation::inversion_mutation(pb, rng);
        return {std::move(pa), std::move(pb)};
    }
    }
    throw std::logic_error("unknown encoding");
}

Point minimized(const ProblemInstance& inst, const Genome& g) { return to_minimization(evaluate(inst, g)); }

double front_metric(const InstanceScorer& scorer, const std::vector<Point>& objs) {
    return scorer.metric(nondominated_filter(objs));
}

} // namespace

SolverResult nsga2_run(const ProblemInstance& instance, const SolverConfig& config, std::uint64_t seed,
                       const GenerationObserver& observer) {
    return nsga2_run(InstanceScorer(instance), config, seed, observer);
}

SolverResult nsga2_run(const InstanceScorer& scorer, const SolverConfig& config, std::uint64_t seed,
                       const GenerationObserver& observer) {
    config.validate();
    const ProblemInstance& inst = scorer.instance();
    inst.validate();
    Rng rng(seed);
    const std::size_t n = config.population_size;

    std::vector<Genome> pop;
    std::vector<Point> objs;
    pop.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Genome g = random_genome(inst, rng);
        if (inst.category == Category::MOKP) variation::rand_weight_repair(inst, std::get<BitGenome>(g), rng);
        objs.push_back(minimized(inst, g));
        pop.push_back(std::move(g));
    }

    SolverResult result;
    result.trace.push_back(front_metric(scorer, objs));
    if (observer) observer(0, pop, objs);

    for (std::size_t gen = 1; gen <= config.generations; ++gen) {
        const auto ranked = rank_population(objs);
        std::vector<Genome> merged = pop;
        std::vector<Point> merged_objs = objs;
        merged.reserve(2 * n);
        merged_objs.reserve(2 * n);
        while (merged.size() < 2 * n) {
            const auto& a = pop[binary_tournament(ranked, rng)];
            const auto& b = pop[binary_tournament(ranked, rng)];
            auto [c1, c2] = make_children(inst, config, a, b, rng);
            merged_objs.push_back(minimized(inst, c1));
            merged.push_back(std::move(c1));
            if (merged.size() < 2 * n) {
                merged_objs.push_back(minimized(inst, c2));
                merged.push_back(std::move(c2));
            }
        }
        auto keep = select_survivors(merged_objs, n);
        std::vector<Genome> next;
        std::vector<Point> next_objs;
        next.reserve(n);
        next_objs.reserve(n);
        for (std::size_t idx : keep) {
            next.push_back(std::move(merged[idx]));
            next_objs.push_back(std::move(merged_objs[idx]));
        }
        pop = std::move(next);
        objs = std::move(next_objs);
        result.trace.push_back(front_metric(scorer, objs));
        if (observer) observer(gen, pop, objs);
    }

    result.front.instance_id = inst.id;
    result.front.points = nondominated_filter(objs);
    result.final_population = std::move(pop);
    return result;
}

} // namespace opevo
