#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "opevo/rng.hpp"

namespace opevo {

enum class Category { CMOP, MOKP, MOTSP };
enum class Encoding { Real, BitString, Permutation };
enum class Orientation { Minimize, Maximize };

std::string_view to_string(Category c);
std::string_view to_string(Encoding e);
Category parse_category(std::string_view s);
Encoding parse_encoding(std::string_view s);

// ---------------------------------------------------------------------------
// Genomes

struct RealGenome {
    std::vector<double> values;
    bool operator==(const RealGenome&) const = default;
};

struct BitGenome {
    std::vector<std::uint8_t> bits;
    bool operator==(const BitGenome&) const = default;
};

struct PermGenome {
    std::vector<int> order;
    bool operator==(const PermGenome&) const = default;
};

using Genome = std::variant<RealGenome, BitGenome, PermGenome>;

Encoding encoding_of(const Genome& g);
std::size_t genome_size(const Genome& g);

/// Wire encoding: a flat JSON array (numbers / 0-1 / integers).
nlohmann::json genome_to_json(const Genome& g);
/// Strict decoding against an expected encoding; throws std::invalid_argument
/// on any shape or type violation.
Genome genome_from_json(const nlohmann::json& j, Encoding encoding);

bool is_permutation_of_range(const std::vector<int>& order);

struct ObjectiveVector {
    std::vector<double> values;
    Orientation orientation = Orientation::Minimize;
};

// ---------------------------------------------------------------------------
// Instances

enum class CmopFamily { ZDT1, ZDT2, ZDT3, ZDT4, ZDT5, ZDT6, DTLZ1, DTLZ2, DTLZ3, DTLZ4, DTLZ5, DTLZ6, DTLZ7 };

std::string_view to_string(CmopFamily f);
CmopFamily parse_family(std::string_view name);
const std::vector<CmopFamily>& all_cmop_families();

struct CmopPayload {
    CmopFamily family;
};

struct MokpPayload {
    std::vector<double> weights;               // w_j
    std::vector<std::vector<double>> profits;  // profits[i][j], objective i, item j
    double capacity = 0.0;
};

struct MotspPayload {
    /// distances[i] is an n*n row-major matrix for objective i.
    std::vector<std::vector<double>> distances;
    bool closed_tour = false;

    double distance(std::size_t objective, std::size_t from, std::size_t to, std::size_t n) const {
        return distances[objective][from * n + to];
    }
};

using Payload = std::variant<CmopPayload, MokpPayload, MotspPayload>;

/// Per-objective normalization reference in the problem's native orientation.
struct ObjectiveBounds {
    std::vector<double> ideal;
    std::vector<double> nadir;
};

class InvalidInstance : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

class EncodingMismatch : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

class EvaluationError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ProblemInstance {
    std::string id;
    Category category = Category::CMOP;
    Encoding encoding = Encoding::Real;
    std::size_t n_var = 0;
    std::size_t k = 0;
    Payload payload;
    ObjectiveBounds bounds;
    /// Decision-variable box for real encodings; empty otherwise.
    std::vector<double> lower;
    std::vector<double> upper;
    std::uint64_t seed = 0;

    Orientation orientation() const {
        return category == Category::MOKP ? Orientation::Maximize : Orientation::Minimize;
    }
    const CmopPayload& cmop() const { return std::get<CmopPayload>(payload); }
    const MokpPayload& mokp() const { return std::get<MokpPayload>(payload); }
    const MotspPayload& motsp() const { return std::get<MotspPayload>(payload); }

    /// Throws InvalidInstance when any structural invariant fails.
    void validate() const;
};

/// CMOP instance at the family's default dimension when n_var is empty.
ProblemInstance make_cmop(CmopFamily family, std::optional<std::size_t> n_var = std::nullopt);
std::size_t default_n_var(CmopFamily family);

ProblemInstance generate_mokp(std::size_t n_items, std::size_t k, Rng& rng);
ProblemInstance generate_motsp(std::size_t n_cities, std::size_t k, Rng& rng);

/// Throws EncodingMismatch, std::invalid_argument (invalid genome) or
/// EvaluationError (non-finite objective).
ObjectiveVector evaluate(const ProblemInstance& instance, const Genome& genome);
bool feasible(const ProblemInstance& instance, const Genome& genome);
Genome random_genome(const ProblemInstance& instance, Rng& rng);

/// Throws std::invalid_argument with a reason when the genome violates the
/// instance's encoding invariants.
void check_genome(const ProblemInstance& instance, const Genome& genome);

/// Objective values converted to minimization (maximized objectives negated).
std::vector<double> to_minimization(const ObjectiveVector& v);

/// Samples of the analytic Pareto front (minimization), evenly spaced in the
/// front's parameter domain. Continuous two-objective fronts return n_points;
/// disconnected and three-objective fronts return at most n_points.
std::vector<std::vector<double>> reference_front(const ProblemInstance& instance, std::size_t n_points);

nlohmann::json instance_to_json(const ProblemInstance& instance);
ProblemInstance instance_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Suites

enum class SuiteRole { Validation, Testing };
std::string_view to_string(SuiteRole r);
SuiteRole parse_role(std::string_view s);

struct SuiteSpec {
    Category category = Category::CMOP;
    SuiteRole role = SuiteRole::Validation;
    std::vector<ProblemInstance> instances;
};

SuiteSpec make_suite(Category category, SuiteRole role, Rng& rng);

/// Small battery used for pilot runs.
SuiteSpec make_toy_suite(Category category);

nlohmann::json suite_to_json(const SuiteSpec& suite);
SuiteSpec suite_from_json(const nlohmann::json& j);

} // namespace opevo
