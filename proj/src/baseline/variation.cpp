#include "opevo/variation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace opevo::variation {

namespace {

double sbx_spread(double u, double alpha, double eta) {
    if (u <= 1.0 / alpha) return std::pow(u * alpha, 1.0 / (eta + 1.0));
    return std::pow(1.0 / (2.0 - u * alpha), 1.0 / (eta + 1.0));
}

std::pair<std::size_t, std::size_t> ordered_cuts(std::size_t n, Rng& rng) {
    std::size_t i = uniform_index(rng, n);
    std::size_t j = uniform_index(rng, n);
    if (i > j) std::swap(i, j);
    return {i, j};
}

} // namespace

std::pair<RealGenome, RealGenome> sbx(const RealGenome& a, const RealGenome& b, const std::vector<double>& lower,
                                      const std::vector<double>& upper, double eta, Rng& rng) {
    if (a.values.size() != b.values.size() || a.values.size() != lower.size())
        throw std::invalid_argument("sbx: parent/bounds size mismatch");
    RealGenome c1 = a;
    RealGenome c2 = b;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        if (uniform01(rng) > 0.5) continue;
        double y1 = std::min(a.values[i], b.values[i]);
        double y2 = std::max(a.values[i], b.values[i]);
        double delta = y2 - y1;
        if (delta <= 1e-14) continue;
        const double u = uniform01(rng);

        double beta = 1.0 + 2.0 * (y1 - lower[i]) / delta;
        double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
        double lo = 0.5 * ((y1 + y2) - sbx_spread(u, alpha, eta) * delta);

        beta = 1.0 + 2.0 * (upper[i] - y2) / delta;
        alpha = 2.0 - std::pow(beta, -(eta + 1.0));
        double hi = 0.5 * ((y1 + y2) + sbx_spread(u, alpha, eta) * delta);

        if (uniform01(rng) < 0.5) std::swap(lo, hi);
        c1.values[i] = std::clamp(lo, lower[i], upper[i]);
        c2.values[i] = std::clamp(hi, lower[i], upper[i]);
    }
    return {std::move(c1), std::move(c2)};
}

void polynomial_mutation(RealGenome& x, const std::vector<double>& lower, const std::vector<double>& upper, double eta,
                         double rate, Rng& rng) {
    const double mut_pow = 1.0 / (eta + 1.0);
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        if (uniform01(rng) >= rate) continue;
        const double span = upper[i] - lower[i];
        double y = x.values[i];
        const double d1 = (y - lower[i]) / span;
        const double d2 = (upper[i] - y) / span;
        const double u = uniform01(rng);
        double dq;
        if (u < 0.5) {
            double val = 2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - d1, eta + 1.0);
            dq = std::pow(val, mut_pow) - 1.0;
        } else {
            double val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(1.0 - d2, eta + 1.0);
            dq = 1.0 - std::pow(val, mut_pow);
        }
        x.values[i] = std::clamp(y + dq * span, lower[i], upper[i]);
    }
}

std::pair<BitGenome, BitGenome> two_point_crossover(const BitGenome& a, const BitGenome& b, Rng& rng) {
    if (a.bits.size() != b.bits.size()) throw std::invalid_argument("two_point_crossover: length mismatch");
    BitGenome c1 = a;
    BitGenome c2 = b;
    if (a.bits.size() < 2) return {c1, c2};
    auto [lo, hi] = ordered_cuts(a.bits.size(), rng);
    for (std::size_t i = lo; i <= hi; ++i) std::swap(c1.bits[i], c2.bits[i]);
    return {std::move(c1), std::move(c2)};
}

void bitflip(BitGenome& x, double rate, Rng& rng) {
    for (auto& b : x.bits)
        if (uniform01(rng) < rate) b ^= 1;
}

std::pair<PermGenome, PermGenome> order_crossover(const PermGenome& a, const PermGenome& b, Rng& rng) {
    const std::size_t n = a.order.size();
    if (b.order.size() != n) throw std::invalid_argument("order_crossover: length mismatch");
    auto [lo, hi] = ordered_cuts(n, rng);
    auto make_child = [&](const PermGenome& keep, const PermGenome& fill) {
        PermGenome child;
        child.order.assign(n, -1);
        std::vector<char> used(n, 0);
        for (std::size_t i = lo; i <= hi; ++i) {
            child.order[i] = keep.order[i];
            used[keep.order[i]] = 1;
        }
        std::size_t pos = (hi + 1) % n;
        for (std::size_t step = 0; step < n; ++step) {
            int city = fill.order[(hi + 1 + step) % n];
            if (used[city]) continue;
            child.order[pos] = city;
            used[city] = 1;
            pos = (pos + 1) % n;
        }
        return child;
    };
    return {make_child(a, b), make_child(b, a)};
}

void inversion_mutation(PermGenome& x, Rng& rng) {
    if (x.order.size() < 2) return;
    auto [lo, hi] = ordered_cuts(x.order.size(), rng);
    std::reverse(x.order.begin() + static_cast<std::ptrdiff_t>(lo), x.order.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
}

void rand_weight_repair(const ProblemInstance& instance, BitGenome& x, Rng& rng) {
    if (instance.category != Category::MOKP) throw EncodingMismatch("rand_weight_repair: MOKP instance required");
    const auto& p = instance.mokp();
    if (x.bits.size() != p.weights.size()) throw std::invalid_argument("rand_weight_repair: genome length mismatch");
    double weight = 0.0;
    std::vector<std::size_t> selected;
    for (std::size_t j = 0; j < x.bits.size(); ++j) {
        if (x.bits[j]) {
            weight += p.weights[j];
            selected.push_back(j);
        }
    }
    while (weight > p.capacity) {
        std::size_t pick = uniform_index(rng, selected.size());
        std::size_t item = selected[pick];
        x.bits[item] = 0;
        weight -= p.weights[item];
        selected[pick] = selected.back();
        selected.pop_back();
    }
}

} // namespace opevo::variation
