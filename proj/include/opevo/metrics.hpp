#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "opevo/problems.hpp"

namespace opevo {

using Point = std::vector<double>;

/// A solution set in minimization orientation.
struct FrontApproximation {
    std::vector<Point> points;
    std::string instance_id;
};

class MetricError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Pareto dominance for minimization: a is no worse everywhere and strictly
/// better somewhere.
bool dominates(std::span<const double> a, std::span<const double> b);

/// Indices (ascending) of the points not dominated by any other point.
/// Duplicates do not dominate each other and are all kept.
std::vector<std::size_t> nondominated_indices(const std::vector<Point>& points);
std::vector<Point> nondominated_filter(const std::vector<Point>& points);

/// Mean over reference points of the distance to the nearest approximation point.
double igd(const std::vector<Point>& reference, const std::vector<Point>& approx);

/// Exact dominated volume for 2 or 3 objectives. Points that do not strictly
/// dominate ref_point contribute nothing.
double hypervolume(const std::vector<Point>& points, const Point& ref_point);

/// Affine map to [0, 1] per objective using minimization-oriented bounds;
/// results are clamped to [0, 2].
std::vector<Point> normalize(const std::vector<Point>& points, const Point& ideal, const Point& nadir);

/// PS for one instance: CMOP 1 - IGD, MOKP 1 - HV, MOTSP HV.
double problem_score(Category category, double metric_value);

/// mean - population standard deviation.
double aggregate_score(std::span<const double> per_problem);

struct ScoreReport {
    std::map<std::string, double> per_problem;
    double aggregate = 0.0;

    static ScoreReport from(std::map<std::string, double> per_problem);
};

/// Per-instance indicator computation. Holds the precomputed reference front
/// for CMOP instances.
class InstanceScorer {
public:
    static constexpr std::size_t kReferencePoints = 1000;

    explicit InstanceScorer(ProblemInstance instance);

    /// IGD against the analytic front (CMOP) or normalized HV (MOKP, MOTSP)
    /// of a minimization-oriented point set.
    double metric(const std::vector<Point>& points) const;
    double score(const std::vector<Point>& points) const { return problem_score(instance_.category, metric(points)); }

    /// Whether a smaller metric value is the better outcome.
    bool lower_is_better() const { return instance_.category != Category::MOTSP; }

    const ProblemInstance& instance() const { return instance_; }
    const std::vector<Point>& reference() const { return reference_; }

private:
    ProblemInstance instance_;
    std::vector<Point> reference_;
};

} // namespace opevo
