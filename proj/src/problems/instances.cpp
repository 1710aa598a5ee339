#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "opevo/problems.hpp"

namespace opevo {

namespace detail {
std::vector<double> evaluate_cmop(const ProblemInstance& inst, const Genome& genome);
std::vector<std::vector<double>> cmop_front(CmopFamily fam, std::size_t n_var, std::size_t n_points);
} // namespace detail

namespace {

constexpr int kMinItemValue = 10;
constexpr int kMaxItemValue = 100;

std::vector<double> minimization_bound(const ProblemInstance& inst, const std::vector<double>& b) {
    return to_minimization(ObjectiveVector{b, inst.orientation()});
}

} // namespace

void ProblemInstance::validate() const {
    if (n_var == 0) throw InvalidInstance(id + ": n_var must be positive");
    if (k < 2) throw InvalidInstance(id + ": at least two objectives required");
    if (bounds.ideal.size() != k || bounds.nadir.size() != k) throw InvalidInstance(id + ": bounds size != k");
    auto ideal = minimization_bound(*this, bounds.ideal);
    auto nadir = minimization_bound(*this, bounds.nadir);
    for (std::size_t i = 0; i < k; ++i) {
        if (!(ideal[i] < nadir[i])) throw InvalidInstance(id + ": ideal must be better than nadir in every objective");
    }
    switch (category) {
    case Category::CMOP:
        if (!std::holds_alternative<CmopPayload>(payload)) throw InvalidInstance(id + ": CMOP payload expected");
        if (encoding == Encoding::Real) {
            if (lower.size() != n_var || upper.size() != n_var) throw InvalidInstance(id + ": variable bounds size");
            for (std::size_t i = 0; i < n_var; ++i)
                if (!(lower[i] < upper[i])) throw InvalidInstance(id + ": empty variable range");
        }
        break;
    case Category::MOKP: {
        if (encoding != Encoding::BitString) throw InvalidInstance(id + ": MOKP must be bitstring-encoded");
        const auto& p = std::get<MokpPayload>(payload);
        if (p.weights.size() != n_var || p.profits.size() != k) throw InvalidInstance(id + ": MOKP payload shape");
        for (const auto& row : p.profits) {
            if (row.size() != n_var) throw InvalidInstance(id + ": MOKP profit row size");
            for (double v : row)
                if (!(v > 0)) throw InvalidInstance(id + ": profits must be positive");
        }
        double total = 0.0;
        double heaviest = 0.0;
        for (double w : p.weights) {
            if (!(w > 0)) throw InvalidInstance(id + ": weights must be positive");
            total += w;
            heaviest = std::max(heaviest, w);
        }
        if (!(p.capacity >= heaviest)) throw InvalidInstance(id + ": capacity below the heaviest item");
        if (!(p.capacity < total)) throw InvalidInstance(id + ": capacity is not binding");
        break;
    }
    case Category::MOTSP: {
        if (encoding != Encoding::Permutation) throw InvalidInstance(id + ": MOTSP must be permutation-encoded");
        const auto& p = std::get<MotspPayload>(payload);
        if (p.distances.size() != k) throw InvalidInstance(id + ": MOTSP needs one matrix per objective");
        for (const auto& d : p.distances) {
            if (d.size() != n_var * n_var) throw InvalidInstance(id + ": distance matrix size");
            for (std::size_t u = 0; u < n_var; ++u) {
                if (d[u * n_var + u] != 0.0) throw InvalidInstance(id + ": nonzero diagonal");
                for (std::size_t v = 0; v < n_var; ++v) {
                    double x = d[u * n_var + v];
                    if (!(x >= 0) || x != d[v * n_var + u]) throw InvalidInstance(id + ": matrix not symmetric nonnegative");
                }
            }
        }
        break;
    }
    }
}

ProblemInstance generate_mokp(std::size_t n_items, std::size_t k, Rng& rng) {
    if (n_items < 2 || k < 2) throw std::invalid_argument("generate_mokp: need n_items >= 2 and k >= 2");
    const std::uint64_t seed = rng();
    Rng local(seed);
    std::uniform_int_distribution<int> value(kMinItemValue, kMaxItemValue);

    MokpPayload p;
    // Redraw weights until every single item fits; only tiny instances ever loop.
    for (;;) {
        p.weights.assign(n_items, 0.0);
        for (auto& w : p.weights) w = value(local);
        double total = std::accumulate(p.weights.begin(), p.weights.end(), 0.0);
        p.capacity = std::round(0.5 * total);
        if (p.capacity >= *std::max_element(p.weights.begin(), p.weights.end()) && p.capacity < total) break;
    }
    p.profits.assign(k, std::vector<double>(n_items));
    for (auto& row : p.profits)
        for (auto& v : row) v = value(local);

    ProblemInstance inst;
    inst.id = "mokp-" + std::to_string(n_items) + "-" + std::to_string(seed % 100000);
    inst.category = Category::MOKP;
    inst.encoding = Encoding::BitString;
    inst.n_var = n_items;
    inst.k = k;
    inst.seed = seed;
    inst.bounds.nadir.assign(k, 0.0);
    for (const auto& row : p.profits) inst.bounds.ideal.push_back(std::accumulate(row.begin(), row.end(), 0.0));
    inst.payload = std::move(p);
    return inst;
}

ProblemInstance generate_motsp(std::size_t n_cities, std::size_t k, Rng& rng) {
    if (n_cities < 3 || k < 2) throw std::invalid_argument("generate_motsp: need n_cities >= 3 and k >= 2");
    const std::uint64_t seed = rng();
    Rng local(seed);
    MotspPayload p;
    for (std::size_t obj = 0; obj < k; ++obj) {
        std::vector<double> xs(n_cities), ys(n_cities);
        for (std::size_t c = 0; c < n_cities; ++c) {
            xs[c] = uniform01(local);
            ys[c] = uniform01(local);
        }
        std::vector<double> d(n_cities * n_cities, 0.0);
        for (std::size_t u = 0; u < n_cities; ++u) {
            for (std::size_t v = u + 1; v < n_cities; ++v) {
                double dist = std::hypot(xs[u] - xs[v], ys[u] - ys[v]);
                d[u * n_cities + v] = dist;
                d[v * n_cities + u] = dist;
            }
        }
        p.distances.push_back(std::move(d));
    }
    ProblemInstance inst;
    inst.id = "motsp-" + std::to_string(n_cities) + "-" + std::to_string(seed % 100000);
    inst.category = Category::MOTSP;
    inst.encoding = Encoding::Permutation;
    inst.n_var = n_cities;
    inst.k = k;
    inst.seed = seed;
    inst.bounds.ideal.assign(k, 0.0);
    inst.bounds.nadir.assign(k, static_cast<double>(n_cities - 1) * std::sqrt(2.0));
    inst.payload = std::move(p);
    return inst;
}

void check_genome(const ProblemInstance& inst, const Genome& genome) {
    if (encoding_of(genome) != inst.encoding)
        throw EncodingMismatch(inst.id + ": expected " + std::string(to_string(inst.encoding)) + " genome, got " +
                               std::string(to_string(encoding_of(genome))));
    if (genome_size(genome) != inst.n_var)
        throw std::invalid_argument(inst.id + ": genome length " + std::to_string(genome_size(genome)) +
                                    " != n_var " + std::to_string(inst.n_var));
    if (const auto* r = std::get_if<RealGenome>(&genome)) {
        for (std::size_t i = 0; i < inst.n_var; ++i) {
            double v = r->values[i];
            if (!std::isfinite(v) || v < inst.lower[i] || v > inst.upper[i])
                throw std::invalid_argument(inst.id + ": variable " + std::to_string(i) + " out of bounds");
        }
    } else if (const auto* b = std::get_if<BitGenome>(&genome)) {
        for (auto bit : b->bits)
            if (bit > 1) throw std::invalid_argument(inst.id + ": bit value other than 0/1");
    } else if (!is_permutation_of_range(std::get<PermGenome>(genome).order)) {
        throw std::invalid_argument(inst.id + ": genome is not a permutation of 0..n-1");
    }
}

ObjectiveVector evaluate(const ProblemInstance& inst, const Genome& genome) {
    check_genome(inst, genome);
    ObjectiveVector out;
    out.orientation = inst.orientation();
    switch (inst.category) {
    case Category::CMOP: out.values = detail::evaluate_cmop(inst, genome); break;
    case Category::MOKP: {
        const auto& p = inst.mokp();
        const auto& bits = std::get<BitGenome>(genome).bits;
        out.values.assign(inst.k, 0.0);
        for (std::size_t i = 0; i < inst.k; ++i)
            for (std::size_t j = 0; j < inst.n_var; ++j)
                if (bits[j]) out.values[i] += p.profits[i][j];
        break;
    }
    case Category::MOTSP: {
        const auto& p = inst.motsp();
        const auto& order = std::get<PermGenome>(genome).order;
        const std::size_t n = inst.n_var;
        out.values.assign(inst.k, 0.0);
        for (std::size_t i = 0; i < inst.k; ++i) {
            for (std::size_t c = 0; c + 1 < n; ++c) out.values[i] += p.distance(i, order[c], order[c + 1], n);
            if (p.closed_tour) out.values[i] += p.distance(i, order[n - 1], order[0], n);
        }
        break;
    }
    }
    for (double v : out.values)
        if (!std::isfinite(v)) throw EvaluationError(inst.id + ": objective evaluated to a non-finite value");
    return out;
}

bool feasible(const ProblemInstance& inst, const Genome& genome) {
    if (inst.category != Category::MOKP) return true;
    const auto& p = inst.mokp();
    const auto& bits = std::get<BitGenome>(genome).bits;
    double weight = 0.0;
    for (std::size_t j = 0; j < bits.size(); ++j)
        if (bits[j]) weight += p.weights[j];
    return weight <= p.capacity;
}

Genome random_genome(const ProblemInstance& inst, Rng& rng) {
    switch (inst.encoding) {
    case Encoding::Real: {
        RealGenome g;
        g.values.resize(inst.n_var);
        for (std::size_t i = 0; i < inst.n_var; ++i)
            g.values[i] = std::uniform_real_distribution<double>(inst.lower[i], inst.upper[i])(rng);
        return g;
    }
    case Encoding::BitString: {
        BitGenome g;
        g.bits.resize(inst.n_var);
        std::bernoulli_distribution coin(0.5);
        for (auto& b : g.bits) b = coin(rng) ? 1 : 0;
        return g;
    }
    case Encoding::Permutation: {
        PermGenome g;
        g.order.resize(inst.n_var);
        std::iota(g.order.begin(), g.order.end(), 0);
        std::shuffle(g.order.begin(), g.order.end(), rng);
        return g;
    }
    }
    throw std::logic_error("unknown encoding");
}

std::vector<std::vector<double>> reference_front(const ProblemInstance& inst, std::size_t n_points) {
    if (inst.category != Category::CMOP) throw std::invalid_argument("reference_front: only CMOP instances have an analytic front");
    return detail::cmop_front(inst.cmop().family, inst.n_var, n_points);
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json instance_to_json(const ProblemInstance& inst) {
    nlohmann::json j;
    j["id"] = inst.id;
    j["category"] = to_string(inst.category);
    j["encoding"] = to_string(inst.encoding);
    j["n_var"] = inst.n_var;
    j["k"] = inst.k;
    j["seed"] = inst.seed;
    j["bounds"] = {{"ideal", inst.bounds.ideal}, {"nadir", inst.bounds.nadir}};
    if (!inst.lower.empty()) {
        j["lower"] = inst.lower;
        j["upper"] = inst.upper;
    }
    nlohmann::json payload;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, CmopPayload>) {
                payload["family"] = to_string(p.family);
            } else if constexpr (std::is_same_v<T, MokpPayload>) {
                payload["weights"] = p.weights;
                payload["profits"] = p.profits;
                payload["capacity"] = p.capacity;
            } else {
                payload["distances"] = p.distances;
                payload["closed_tour"] = p.closed_tour;
            }
        },
        inst.payload);
    j["payload"] = std::move(payload);
    return j;
}

ProblemInstance instance_from_json(const nlohmann::json& j) {
    ProblemInstance inst;
    try {
        inst.id = j.at("id").get<std::string>();
        inst.category = parse_category(j.at("category").get<std::string>());
        inst.encoding = parse_encoding(j.at("encoding").get<std::string>());
        inst.n_var = j.at("n_var").get<std::size_t>();
        inst.k = j.at("k").get<std::size_t>();
        inst.seed = j.value("seed", std::uint64_t{0});
        inst.bounds.ideal = j.at("bounds").at("ideal").get<std::vector<double>>();
        inst.bounds.nadir = j.at("bounds").at("nadir").get<std::vector<double>>();
        if (j.contains("lower")) {
            inst.lower = j.at("lower").get<std::vector<double>>();
            inst.upper = j.at("upper").get<std::vector<double>>();
        }
        const auto& p = j.at("payload");
        switch (inst.category) {
        case Category::CMOP: inst.payload = CmopPayload{parse_family(p.at("family").get<std::string>())}; break;
        case Category::MOKP: {
            MokpPayload m;
            m.weights = p.at("weights").get<std::vector<double>>();
            m.profits = p.at("profits").get<std::vector<std::vector<double>>>();
            m.capacity = p.at("capacity").get<double>();
            inst.payload = std::move(m);
            break;
        }
        case Category::MOTSP: {
            MotspPayload m;
            m.distances = p.at("distances").get<std::vector<std::vector<double>>>();
            m.closed_tour = p.value("closed_tour", false);
            inst.payload = std::move(m);
            break;
        }
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInstance(std::string("malformed instance document: ") + e.what());
    }
    if (inst.category == Category::CMOP) {
        auto fam = inst.cmop().family;
        bool bits = fam == CmopFamily::ZDT5;
        if ((inst.encoding == Encoding::BitString) != bits) throw InvalidInstance(inst.id + ": encoding does not match family");
    }
    inst.validate();
    return inst;
}

// ---------------------------------------------------------------------------
// Suites

std::string_view to_string(SuiteRole r) { return r == SuiteRole::Validation ? "validation" : "testing"; }

SuiteRole parse_role(std::string_view s) {
    if (s == "validation") return SuiteRole::Validation;
    if (s == "testing") return SuiteRole::Testing;
    throw std::invalid_argument("unknown suite role '" + std::string(s) + "'");
}

namespace {

std::string suite_id(Category c, SuiteRole r, std::size_t index) {
    std::string cat(to_string(c));
    std::transform(cat.begin(), cat.end(), cat.begin(), [](unsigned char ch) { return std::tolower(ch); });
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02zu", index + 1);
    return cat + (r == SuiteRole::Validation ? "-val-" : "-test-") + buf;
}

std::size_t uniform_size(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

} // namespace

SuiteSpec make_suite(Category category, SuiteRole role, Rng& rng) {
    SuiteSpec suite;
    suite.category = category;
    suite.role = role;
    const bool validation = role == SuiteRole::Validation;
    switch (category) {
    case Category::CMOP:
        for (auto fam : all_cmop_families()) {
            auto inst = validation ? make_cmop(fam) : make_cmop(fam, 50);
            inst.id = "cmop-" + std::string(validation ? "val-" : "test-") + std::string(to_string(fam));
            suite.instances.push_back(std::move(inst));
        }
        break;
    case Category::MOKP:
        for (std::size_t i = 0; i < 10; ++i) {
            auto inst = generate_mokp(validation ? uniform_size(rng, 50, 200) : uniform_size(rng, 100, 200), 2, rng);
            inst.id = suite_id(category, role, i);
            suite.instances.push_back(std::move(inst));
        }
        break;
    case Category::MOTSP: {
        const std::size_t count = validation ? 20 : 10;
        for (std::size_t i = 0; i < count; ++i) {
            auto inst = generate_motsp(validation ? 30 : uniform_size(rng, 100, 200), 2, rng);
            inst.id = suite_id(category, role, i);
            suite.instances.push_back(std::move(inst));
        }
        break;
    }
    }
    return suite;
}

SuiteSpec make_toy_suite(Category category) {
    SuiteSpec suite;
    suite.category = category;
    suite.role = SuiteRole::Validation;
    Rng rng(20240601);
    ProblemInstance inst;
    switch (category) {
    case Category::CMOP: inst = make_cmop(CmopFamily::ZDT1, 10); break;
    case Category::MOKP: inst = generate_mokp(20, 2, rng); break;
    case Category::MOTSP: inst = generate_motsp(10, 2, rng); break;
    }
    inst.id = "toy-" + inst.id;
    suite.instances.push_back(std::move(inst));
    return suite;
}

nlohmann::json suite_to_json(const SuiteSpec& suite) {
    nlohmann::json j;
    j["category"] = to_string(suite.category);
    j["role"] = to_string(suite.role);
    j["instances"] = nlohmann::json::array();
    for (const auto& inst : suite.instances) j["instances"].push_back(instance_to_json(inst));
    return j;
}

SuiteSpec suite_from_json(const nlohmann::json& j) {
    SuiteSpec suite;
    try {
        suite.category = parse_category(j.at("category").get<std::string>());
        suite.role = parse_role(j.at("role").get<std::string>());
        for (const auto& ij : j.at("instances")) suite.instances.push_back(instance_from_json(ij));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInstance(std::string("malformed suite document: ") + e.what());
    }
    return suite;
}

} // namespace opevo
