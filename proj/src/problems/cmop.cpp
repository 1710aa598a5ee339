// ZDT and DTLZ test families in their canonical (pymoo-default) form.
//
// ZDT5 is bitstring-encoded: a 30-bit head followed by (n_var - 30) / 5
// five-bit groups, objectives normalized to [0, 1] like the reference
// toolkit does.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "opevo/problems.hpp"

namespace opevo {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kDtlzObjectives = 3;
constexpr std::size_t kZdt5Head = 30;
constexpr std::size_t kZdt5Group = 5;

struct FamilyName {
    CmopFamily family;
    const char* name;
};

constexpr FamilyName kNames[] = {
    {CmopFamily::ZDT1, "zdt1"},   {CmopFamily::ZDT2, "zdt2"},   {CmopFamily::ZDT3, "zdt3"},
    {CmopFamily::ZDT4, "zdt4"},   {CmopFamily::ZDT5, "zdt5"},   {CmopFamily::ZDT6, "zdt6"},
    {CmopFamily::DTLZ1, "dtlz1"}, {CmopFamily::DTLZ2, "dtlz2"}, {CmopFamily::DTLZ3, "dtlz3"},
    {CmopFamily::DTLZ4, "dtlz4"}, {CmopFamily::DTLZ5, "dtlz5"}, {CmopFamily::DTLZ6, "dtlz6"},
    {CmopFamily::DTLZ7, "dtlz7"},
};

bool is_zdt(CmopFamily f) { return f <= CmopFamily::ZDT6; }

// Pareto-optimal x1 segments of ZDT3.
constexpr double kZdt3Regions[][2] = {
    {0.0, 0.0830015349},
    {0.182228780, 0.2577623634},
    {0.4093136748, 0.4538821041},
    {0.6183967944, 0.6525117038},
    {0.8233317983, 0.8518328654},
};

constexpr double kZdt6MinF1 = 0.2807753191;

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = a;
        return out;
    }
    for (std::size_t i = 0; i < n; ++i) out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

bool dominates(const std::vector<double>& a, const std::vector<double>& b) {
    bool strict = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) return false;
        if (a[i] < b[i]) strict = true;
    }
    return strict;
}

std::vector<std::vector<double>> keep_nondominated(std::vector<std::vector<double>> pts) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < pts.size() && !dominated; ++j) dominated = j != i && dominates(pts[j], pts[i]);
        if (!dominated) out.push_back(pts[i]);
    }
    return out;
}

// Das-Dennis simplex lattice on the 3-objective unit simplex with the
// largest partition count whose size stays within n_points.
std::vector<std::vector<double>> simplex_lattice(std::size_t n_points) {
    std::size_t p = 1;
    while ((p + 2) * (p + 3) / 2 <= n_points) ++p;
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i <= p; ++i) {
        for (std::size_t j = 0; j <= p - i; ++j) {
            std::size_t l = p - i - j;
            out.push_back({static_cast<double>(i) / p, static_cast<double>(j) / p, static_cast<double>(l) / p});
        }
    }
    return out;
}

std::size_t zdt5_groups(std::size_t n_var) { return (n_var - kZdt5Head) / kZdt5Group; }

std::vector<double> eval_zdt(CmopFamily f, const std::vector<double>& x) {
    const std::size_t n = x.size();
    const double tail = std::accumulate(x.begin() + 1, x.end(), 0.0);
    double f1 = x[0];
    double g = 0.0;
    double f2 = 0.0;
    switch (f) {
    case CmopFamily::ZDT1:
        g = 1.0 + 9.0 / static_cast<double>(n - 1) * tail;
        f2 = g * (1.0 - std::sqrt(f1 / g));
        break;
    case CmopFamily::ZDT2:
        g = 1.0 + 9.0 / static_cast<double>(n - 1) * tail;
        f2 = g * (1.0 - (f1 / g) * (f1 / g));
        break;
    case CmopFamily::ZDT3:
        g = 1.0 + 9.0 / static_cast<double>(n - 1) * tail;
        f2 = g * (1.0 - std::sqrt(f1 / g) - (f1 / g) * std::sin(10.0 * kPi * f1));
        break;
    case CmopFamily::ZDT4: {
        g = 1.0 + 10.0 * static_cast<double>(n - 1);
        for (std::size_t i = 1; i < n; ++i) g += x[i] * x[i] - 10.0 * std::cos(4.0 * kPi * x[i]);
        f2 = g * (1.0 - std::sqrt(f1 / g));
        break;
    }
    case CmopFamily::ZDT6: {
        f1 = 1.0 - std::exp(-4.0 * x[0]) * std::pow(std::sin(6.0 * kPi * x[0]), 6);
        g = 1.0 + 9.0 * std::pow(tail / static_cast<double>(n - 1), 0.25);
        f2 = g * (1.0 - (f1 / g) * (f1 / g));
        break;
    }
    default: throw std::logic_error("not a real-coded ZDT family");
    }
    return {f1, f2};
}

std::vector<double> eval_zdt5(const std::vector<std::uint8_t>& bits) {
    const std::size_t groups = zdt5_groups(bits.size());
    auto count = [&](std::size_t from, std::size_t len) {
        return static_cast<double>(std::count(bits.begin() + from, bits.begin() + from + len, 1));
    };
    const double f1 = 1.0 + count(0, kZdt5Head);
    double g = 0.0;
    for (std::size_t i = 0; i < groups; ++i) {
        double u = count(kZdt5Head + i * kZdt5Group, kZdt5Group);
        g += u < static_cast<double>(kZdt5Group) ? 2.0 + u : 1.0;
    }
    const double f2 = g / f1;
    const double m1 = static_cast<double>(groups);
    return {(f1 - 1.0) / 30.0, (f2 - m1 / 31.0) / (m1 - m1 / 31.0)};
}

// Spherical mapping shared by DTLZ2..DTLZ6: f_m from angles theta (radians).
std::vector<double> sphere_shape(const std::vector<double>& theta, double g, std::size_t m) {
    std::vector<double> f(m, 1.0 + g);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j + i + 1 < m; ++j) f[i] *= std::cos(theta[j]);
        if (i > 0) f[i] *= std::sin(theta[m - 1 - i]);
    }
    return f;
}

std::vector<double> eval_dtlz(CmopFamily fam, const std::vector<double>& x) {
    const std::size_t m = kDtlzObjectives;
    const std::size_t n = x.size();
    const std::size_t k = n - m + 1;
    auto tail_begin = x.begin() + static_cast<std::ptrdiff_t>(m - 1);

    auto g_rastrigin = [&] {
        double s = 0.0;
        for (auto it = tail_begin; it != x.end(); ++it) {
            double d = *it - 0.5;
            s += d * d - std::cos(20.0 * kPi * d);
        }
        return 100.0 * (static_cast<double>(k) + s);
    };
    auto g_sphere = [&] {
        double s = 0.0;
        for (auto it = tail_begin; it != x.end(); ++it) s += (*it - 0.5) * (*it - 0.5);
        return s;
    };

    switch (fam) {
    case CmopFamily::DTLZ1: {
        double g = g_rastrigin();
        std::vector<double> f(m, 0.5 * (1.0 + g));
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j + i + 1 < m; ++j) f[i] *= x[j];
            if (i > 0) f[i] *= 1.0 - x[m - 1 - i];
        }
        return f;
    }
    case CmopFamily::DTLZ2:
    case CmopFamily::DTLZ3:
    case CmopFamily::DTLZ4: {
        double g = fam == CmopFamily::DTLZ3 ? g_rastrigin() : g_sphere();
        double alpha = fam == CmopFamily::DTLZ4 ? 100.0 : 1.0;
        std::vector<double> theta(m - 1);
        for (std::size_t j = 0; j + 1 < m; ++j) theta[j] = std::pow(x[j], alpha) * kPi / 2.0;
        return sphere_shape(theta, g, m);
    }
    case CmopFamily::DTLZ5:
    case CmopFamily::DTLZ6: {
        double g = 0.0;
        if (fam == CmopFamily::DTLZ5) {
            g = g_sphere();
        } else {
            for (auto it = tail_begin; it != x.end(); ++it) g += std::pow(*it, 0.1);
        }
        std::vector<double> theta(m - 1);
        theta[0] = x[0] * kPi / 2.0;
        for (std::size_t j = 1; j + 1 < m; ++j) theta[j] = kPi / (4.0 * (1.0 + g)) * (1.0 + 2.0 * g * x[j]);
        return sphere_shape(theta, g, m);
    }
    case CmopFamily::DTLZ7: {
        double g = 1.0 + 9.0 / static_cast<double>(k) * std::accumulate(tail_begin, x.end(), 0.0);
        std::vector<double> f(m);
        double h = static_cast<double>(m);
        for (std::size_t i = 0; i + 1 < m; ++i) {
            f[i] = x[i];
            h -= f[i] / (1.0 + g) * (1.0 + std::sin(3.0 * kPi * f[i]));
        }
        f[m - 1] = (1.0 + g) * h;
        return f;
    }
    default: throw std::logic_error("not a DTLZ family");
    }
}

} // namespace

std::string_view to_string(CmopFamily f) {
    for (const auto& n : kNames)
        if (n.family == f) return n.name;
    return "?";
}

CmopFamily parse_family(std::string_view name) {
    std::string low(name);
    std::transform(low.begin(), low.end(), low.begin(), [](unsigned char c) { return std::tolower(c); });
    for (const auto& n : kNames)
        if (low == n.name) return n.family;
    throw std::invalid_argument("unknown CMOP family '" + std::string(name) + "'");
}

const std::vector<CmopFamily>& all_cmop_families() {
    static const std::vector<CmopFamily> all = [] {
        std::vector<CmopFamily> v;
        for (const auto& n : kNames) v.push_back(n.family);
        return v;
    }();
    return all;
}

std::size_t default_n_var(CmopFamily f) {
    switch (f) {
    case CmopFamily::ZDT1:
    case CmopFamily::ZDT2:
    case CmopFamily::ZDT3: return 30;
    case CmopFamily::ZDT4:
    case CmopFamily::ZDT6: return 10;
    case CmopFamily::ZDT5: return kZdt5Head + 10 * kZdt5Group;
    case CmopFamily::DTLZ1: return kDtlzObjectives + 4;
    case CmopFamily::DTLZ7: return kDtlzObjectives + 19;
    default: return kDtlzObjectives + 9;
    }
}

namespace detail {

std::vector<double> evaluate_cmop(const ProblemInstance& inst, const Genome& genome) {
    const CmopFamily fam = inst.cmop().family;
    if (fam == CmopFamily::ZDT5) return eval_zdt5(std::get<BitGenome>(genome).bits);
    const auto& x = std::get<RealGenome>(genome).values;
    return is_zdt(fam) ? eval_zdt(fam, x) : eval_dtlz(fam, x);
}

std::vector<std::vector<double>> cmop_front(CmopFamily fam, std::size_t n_var, std::size_t n_points) {
    if (n_points == 0) throw std::invalid_argument("reference_front: n_points must be positive");
    std::vector<std::vector<double>> pts;
    switch (fam) {
    case CmopFamily::ZDT1:
    case CmopFamily::ZDT4:
        for (double t : linspace(0.0, 1.0, n_points)) pts.push_back({t, 1.0 - std::sqrt(t)});
        return pts;
    case CmopFamily::ZDT2:
        for (double t : linspace(0.0, 1.0, n_points)) pts.push_back({t, 1.0 - t * t});
        return pts;
    case CmopFamily::ZDT6:
        for (double t : linspace(kZdt6MinF1, 1.0, n_points)) pts.push_back({t, 1.0 - t * t});
        return pts;
    case CmopFamily::ZDT3: {
        double total = 0.0;
        for (const auto& r : kZdt3Regions) total += r[1] - r[0];
        for (double s : linspace(0.0, total, n_points)) {
            double rest = s;
            double t = kZdt3Regions[4][1];
            for (const auto& r : kZdt3Regions) {
                if (rest <= r[1] - r[0]) {
                    t = r[0] + rest;
                    break;
                }
                rest -= r[1] - r[0];
            }
            pts.push_back({t, 1.0 - std::sqrt(t) - t * std::sin(10.0 * kPi * t)});
        }
        return keep_nondominated(std::move(pts));
    }
    case CmopFamily::ZDT5: {
        const double m1 = static_cast<double>(zdt5_groups(n_var));
        for (double t : linspace(0.0, 1.0, n_points)) {
            double f1 = 1.0 + 30.0 * t;
            double f2 = m1 / f1;
            pts.push_back({(f1 - 1.0) / 30.0, (f2 - m1 / 31.0) / (m1 - m1 / 31.0)});
        }
        return pts;
    }
    case CmopFamily::DTLZ1:
        for (auto w : simplex_lattice(n_points)) {
            for (double& v : w) v *= 0.5;
            pts.push_back(std::move(w));
        }
        return pts;
    case CmopFamily::DTLZ2:
    case CmopFamily::DTLZ3:
    case CmopFamily::DTLZ4:
        for (auto w : simplex_lattice(n_points)) {
            double norm = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
            for (double& v : w) v /= norm;
            pts.push_back(std::move(w));
        }
        return pts;
    case CmopFamily::DTLZ5:
    case CmopFamily::DTLZ6:
        for (double theta : linspace(0.0, kPi / 2.0, n_points)) {
            double c = std::cos(theta) / std::sqrt(2.0);
            pts.push_back({c, c, std::sin(theta)});
        }
        return pts;
    case CmopFamily::DTLZ7: {
        auto side = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_points))));
        side = std::max<std::size_t>(side, 1);
        for (double a : linspace(0.0, 1.0, side)) {
            for (double b : linspace(0.0, 1.0, side)) {
                double h = 3.0 - a / 2.0 * (1.0 + std::sin(3.0 * kPi * a)) - b / 2.0 * (1.0 + std::sin(3.0 * kPi * b));
                pts.push_back({a, b, 2.0 * h});
            }
        }
        return keep_nondominated(std::move(pts));
    }
    }
    throw std::invalid_argument("unknown CMOP family");
}

} // namespace detail

ProblemInstance make_cmop(CmopFamily family, std::optional<std::size_t> n_var) {
    ProblemInstance inst;
    const std::size_t n = n_var.value_or(default_n_var(family));
    inst.id = std::string(to_string(family));
    inst.category = Category::CMOP;
    inst.n_var = n;
    inst.k = is_zdt(family) ? 2 : kDtlzObjectives;
    inst.payload = CmopPayload{family};
    if (family == CmopFamily::ZDT5) {
        if (n < kZdt5Head + kZdt5Group || (n - kZdt5Head) % kZdt5Group != 0)
            throw InvalidInstance("zdt5 needs 30 + 5*m bits, got " + std::to_string(n));
        inst.encoding = Encoding::BitString;
    } else {
        if (n < (is_zdt(family) ? 2 : kDtlzObjectives)) throw InvalidInstance("too few decision variables");
        inst.encoding = Encoding::Real;
        inst.lower.assign(n, 0.0);
        inst.upper.assign(n, 1.0);
        if (family == CmopFamily::ZDT4) {
            std::fill(inst.lower.begin() + 1, inst.lower.end(), -5.0);
            std::fill(inst.upper.begin() + 1, inst.upper.end(), 5.0);
        }
    }
    // Normalization bounds from the extent of the analytic front.
    auto front = detail::cmop_front(family, n, 1000);
    inst.bounds.ideal.assign(inst.k, std::numeric_limits<double>::infinity());
    inst.bounds.nadir.assign(inst.k, -std::numeric_limits<double>::infinity());
    for (const auto& p : front) {
        for (std::size_t i = 0; i < inst.k; ++i) {
            inst.bounds.ideal[i] = std::min(inst.bounds.ideal[i], p[i]);
            inst.bounds.nadir[i] = std::max(inst.bounds.nadir[i], p[i]);
        }
    }
    return inst;
}

} // namespace opevo
