#pragma once

// Independent reference implementations used to check the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using Point = std::vector<double>;

inline bool dominates(const Point& a, const Point& b) {
    bool strict = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) return false;
        if (a[i] < b[i]) strict = true;
    }
    return strict;
}

/// O(n^2) nondominated indices.
inline std::vector<std::size_t> nondominated(const std::vector<Point>& pts) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < pts.size() && !dominated; ++j)
            if (j != i && dominates(pts[j], pts[i])) dominated = true;
        if (!dominated) out.push_back(i);
    }
    return out;
}

/// Front index of each point by repeated peeling.
inline std::vector<std::size_t> front_ranks(const std::vector<Point>& pts) {
    std::vector<std::size_t> rank(pts.size(), std::numeric_limits<std::size_t>::max());
    std::size_t assigned = 0, r = 0;
    while (assigned < pts.size()) {
        std::vector<std::size_t> current;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (rank[i] != std::numeric_limits<std::size_t>::max()) continue;
            bool dominated = false;
            for (std::size_t j = 0; j < pts.size() && !dominated; ++j)
                if (j != i && rank[j] == std::numeric_limits<std::size_t>::max() && dominates(pts[j], pts[i]))
                    dominated = true;
            if (!dominated) current.push_back(i);
        }
        for (auto i : current) rank[i] = r;
        assigned += current.size();
        ++r;
    }
    return rank;
}

inline double igd(const std::vector<Point>& ref, const std::vector<Point>& approx) {
    double total = 0.0;
    for (const auto& r : ref) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& a : approx) {
            double d = 0.0;
            for (std::size_t i = 0; i < r.size(); ++i) d += (r[i] - a[i]) * (r[i] - a[i]);
            best = std::min(best, std::sqrt(d));
        }
        total += best;
    }
    return total / static_cast<double>(ref.size());
}

struct McEstimate {
    double value;
    double std_error;
};

/// Monte-Carlo hypervolume over the box [lower, ref].
inline McEstimate mc_hypervolume(const std::vector<Point>& pts, const Point& lower, const Point& ref,
                                 std::size_t samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double box = 1.0;
    for (std::size_t i = 0; i < ref.size(); ++i) box *= ref[i] - lower[i];
    std::size_t hits = 0;
    Point s(ref.size());
    for (std::size_t n = 0; n < samples; ++n) {
        for (std::size_t i = 0; i < ref.size(); ++i) s[i] = lower[i] + u(rng) * (ref[i] - lower[i]);
        for (const auto& p : pts) {
            bool inside = true;
            for (std::size_t i = 0; i < ref.size() && inside; ++i) inside = p[i] <= s[i];
            if (inside) {
                ++hits;
                break;
            }
        }
    }
    const double frac = static_cast<double>(hits) / static_cast<double>(samples);
    return {frac * box, box * std::sqrt(frac * (1.0 - frac) / static_cast<double>(samples))};
}

/// Softmax computed in long double without shifting, for moderate inputs.
inline std::vector<double> softmax_direct(const std::vector<double>& s) {
    long double total = 0;
    for (double x : s) total += std::exp(static_cast<long double>(x));
    std::vector<double> out;
    for (double x : s) out.push_back(static_cast<double>(std::exp(static_cast<long double>(x)) / total));
    return out;
}

inline double mean_minus_pstd(const std::vector<double>& v) {
    long double m = 0;
    for (double x : v) m += x;
    m /= v.size();
    long double var = 0;
    for (double x : v) var += (x - m) * (x - m);
    var /= v.size();
    return static_cast<double>(m - std::sqrt(var));
}

} // namespace oracle
