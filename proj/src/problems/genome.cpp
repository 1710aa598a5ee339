#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "opevo/problems.hpp"

namespace opevo {

std::string_view to_string(Category c) {
    switch (c) {
    case Category::CMOP: return "CMOP";
    case Category::MOKP: return "MOKP";
    case Category::MOTSP: return "MOTSP";
    }
    return "?";
}

std::string_view to_string(Encoding e) {
    switch (e) {
    case Encoding::Real: return "real";
    case Encoding::BitString: return "bitstring";
    case Encoding::Permutation: return "permutation";
    }
    return "?";
}

Category parse_category(std::string_view s) {
    std::string up(s);
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
    if (up == "CMOP") return Category::CMOP;
    if (up == "MOKP") return Category::MOKP;
    if (up == "MOTSP") return Category::MOTSP;
    throw std::invalid_argument("unknown category '" + std::string(s) + "'");
}

Encoding parse_encoding(std::string_view s) {
    if (s == "real") return Encoding::Real;
    if (s == "bitstring") return Encoding::BitString;
    if (s == "permutation") return Encoding::Permutation;
    throw std::invalid_argument("unknown encoding '" + std::string(s) + "'");
}

Encoding encoding_of(const Genome& g) {
    switch (g.index()) {
    case 0: return Encoding::Real;
    case 1: return Encoding::BitString;
    default: return Encoding::Permutation;
    }
}

std::size_t genome_size(const Genome& g) {
    return std::visit(
        [](const auto& x) -> std::size_t {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, RealGenome>) return x.values.size();
            else if constexpr (std::is_same_v<T, BitGenome>) return x.bits.size();
            else return x.order.size();
        },
        g);
}

bool is_permutation_of_range(const std::vector<int>& order) {
    std::vector<char> seen(order.size(), 0);
    for (int v : order) {
        if (v < 0 || static_cast<std::size_t>(v) >= order.size() || seen[v]) return false;
        seen[v] = 1;
    }
    return true;
}

nlohmann::json genome_to_json(const Genome& g) {
    nlohmann::json out = nlohmann::json::array();
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, RealGenome>) {
                for (double v : x.values) out.push_back(v);
            } else if constexpr (std::is_same_v<T, BitGenome>) {
                for (auto b : x.bits) out.push_back(static_cast<int>(b));
            } else {
                for (int v : x.order) out.push_back(v);
            }
        },
        g);
    return out;
}

Genome genome_from_json(const nlohmann::json& j, Encoding encoding) {
    if (!j.is_array()) throw std::invalid_argument("genome is not an array");
    switch (encoding) {
    case Encoding::Real: {
        RealGenome g;
        g.values.reserve(j.size());
        for (const auto& v : j) {
            if (!v.is_number()) throw std::invalid_argument("real genome entry is not a number");
            double d = v.get<double>();
            if (!std::isfinite(d)) throw std::invalid_argument("real genome entry is not finite");
            g.values.push_back(d);
        }
        return g;
    }
    case Encoding::BitString: {
        BitGenome g;
        g.bits.reserve(j.size());
        for (const auto& v : j) {
            if (v.is_boolean()) {
                g.bits.push_back(v.get<bool>() ? 1 : 0);
                continue;
            }
            if (!v.is_number_integer()) throw std::invalid_argument("bit entry is not 0/1");
            auto b = v.get<long long>();
            if (b != 0 && b != 1) throw std::invalid_argument("bit entry is not 0/1");
            g.bits.push_back(static_cast<std::uint8_t>(b));
        }
        return g;
    }
    case Encoding::Permutation: {
        PermGenome g;
        g.order.reserve(j.size());
        for (const auto& v : j) {
            if (!v.is_number_integer()) throw std::invalid_argument("permutation entry is not an integer");
            g.order.push_back(v.get<int>());
        }
        return g;
    }
    }
    throw std::invalid_argument("unknown encoding");
}

std::vector<double> to_minimization(const ObjectiveVector& v) {
    if (v.orientation == Orientation::Minimize) return v.values;
    std::vector<double> out(v.values.size());
    std::transform(v.values.begin(), v.values.end(), out.begin(), [](double x) { return -x; });
    return out;
}

} // namespace opevo
