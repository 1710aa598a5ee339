#include "opevo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace opevo {

namespace {

void require_dimension(const std::vector<Point>& pts, std::size_t dim, const char* what) {
    for (const auto& p : pts)
        if (p.size() != dim) throw MetricError(std::string(what) + ": dimension mismatch");
}

// Sweep over points sorted by the first objective, keeping the running
// minimum of the second.
double hv2d(std::vector<std::pair<double, double>> pts, double rx, double ry) {
    std::sort(pts.begin(), pts.end());
    double area = 0.0;
    double best_y = ry;
    for (const auto& [x, y] : pts) {
        if (y < best_y) {
            area += (rx - x) * (best_y - y);
            best_y = y;
        }
    }
    return area;
}

double hv3d(std::vector<Point> pts, const Point& ref) {
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a[2] < b[2]; });
    double volume = 0.0;
    std::vector<std::pair<double, double>> slab;
    slab.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        slab.emplace_back(pts[i][0], pts[i][1]);
        double next_z = i + 1 < pts.size() ? pts[i + 1][2] : ref[2];
        double depth = next_z - pts[i][2];
        if (depth > 0.0) volume += hv2d(slab, ref[0], ref[1]) * depth;
    }
    return volume;
}

} // namespace

bool dominates(std::span<const double> a, std::span<const double> b) {
    bool strict = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) return false;
        if (a[i] < b[i]) strict = true;
    }
    return strict;
}

std::vector<std::size_t> nondominated_indices(const std::vector<Point>& points) {
    if (points.empty()) return {};
    require_dimension(points, points.front().size(), "nondominated_filter");
    // Any dominator is lexicographically smaller, and dominance is transitive,
    // so checking against the nondominated points already kept suffices.
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
    std::vector<std::size_t> kept;
    for (std::size_t idx : order) {
        bool dominated = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) { return dominates(points[k], points[idx]); });
        if (!dominated) kept.push_back(idx);
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

std::vector<Point> nondominated_filter(const std::vector<Point>& points) {
    std::vector<Point> out;
    for (std::size_t i : nondominated_indices(points)) out.push_back(points[i]);
    return out;
}

double igd(const std::vector<Point>& reference, const std::vector<Point>& approx) {
    if (reference.empty() || approx.empty()) throw MetricError("igd: empty input");
    const std::size_t dim = reference.front().size();
    require_dimension(reference, dim, "igd");
    require_dimension(approx, dim, "igd");
    double total = 0.0;
    for (const auto& r : reference) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& a : approx) {
            double sq = 0.0;
            for (std::size_t i = 0; i < dim; ++i) sq += (r[i] - a[i]) * (r[i] - a[i]);
            best = std::min(best, sq);
        }
        total += std::sqrt(best);
    }
    return total / static_cast<double>(reference.size());
}

double hypervolume(const std::vector<Point>& points, const Point& ref) {
    const std::size_t dim = ref.size();
    if (dim < 2 || dim > 3) throw MetricError("hypervolume: only 2 or 3 objectives are supported");
    require_dimension(points, dim, "hypervolume");
    std::vector<Point> inside;
    for (const auto& p : points) {
        bool strictly = true;
        for (std::size_t i = 0; i < dim && strictly; ++i) strictly = p[i] < ref[i];
        if (strictly) inside.push_back(p);
    }
    if (inside.empty()) return 0.0;
    if (dim == 2) {
        std::vector<std::pair<double, double>> pts;
        pts.reserve(inside.size());
        for (const auto& p : inside) pts.emplace_back(p[0], p[1]);
        return hv2d(std::move(pts), ref[0], ref[1]);
    }
    return hv3d(std::move(inside), ref);
}

std::vector<Point> normalize(const std::vector<Point>& points, const Point& ideal, const Point& nadir) {
    if (ideal.size() != nadir.size()) throw MetricError("normalize: bounds size mismatch");
    for (std::size_t i = 0; i < ideal.size(); ++i)
        if (!(ideal[i] < nadir[i])) throw MetricError("normalize: degenerate bounds");
    require_dimension(points, ideal.size(), "normalize");
    std::vector<Point> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        Point q(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) q[i] = std::clamp((p[i] - ideal[i]) / (nadir[i] - ideal[i]), 0.0, 2.0);
        out.push_back(std::move(q));
    }
    return out;
}

double problem_score(Category category, double metric_value) {
    switch (category) {
    case Category::CMOP: return 1.0 - metric_value;
    case Category::MOKP: return 1.0 - metric_value;
    case Category::MOTSP: return metric_value;
    }
    throw MetricError("problem_score: unknown category");
}

double aggregate_score(std::span<const double> values) {
    if (values.empty()) throw MetricError("aggregate_score: empty sequence");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    return mean - std::sqrt(var / n);
}

ScoreReport ScoreReport::from(std::map<std::string, double> per_problem) {
    ScoreReport r;
    std::vector<double> values;
    for (const auto& [id, v] : per_problem) values.push_back(v);
    r.aggregate = aggregate_score(values);
    r.per_problem = std::move(per_problem);
    return r;
}

InstanceScorer::InstanceScorer(ProblemInstance instance) : instance_(std::move(instance)) {
    if (instance_.category == Category::CMOP) reference_ = reference_front(instance_, kReferencePoints);
}

double InstanceScorer::metric(const std::vector<Point>& points) const {
    if (points.empty()) throw MetricError("metric: empty front");
    switch (instance_.category) {
    case Category::CMOP: return igd(reference_, points);
    case Category::MOKP: {
        // Profits as fractions of the full-sum ideal, measured against the
        // ideal corner: the better the front, the smaller the volume.
        std::vector<Point> fractions;
        fractions.reserve(points.size());
        for (const auto& p : points) {
            Point q(p.size());
            for (std::size_t i = 0; i < p.size(); ++i) q[i] = std::clamp(-p[i] / instance_.bounds.ideal[i], 0.0, 1.0);
            fractions.push_back(std::move(q));
        }
        return hypervolume(fractions, Point(instance_.k, 1.0));
    }
    case Category::MOTSP: {
        auto normalized = normalize(points, instance_.bounds.ideal, instance_.bounds.nadir);
        return hypervolume(normalized, Point(instance_.k, 1.0));
    }
    }
    throw MetricError("metric: unknown category");
}

} // namespace opevo
