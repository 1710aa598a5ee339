#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace opevo {

/// The single random engine type used throughout. Every consumer receives
/// one explicitly; there is no global random state.
using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stable 64-bit hash (FNV-1a, finalized with splitmix64). Independent of
/// the standard library's std::hash, so derived seeds are identical across
/// platforms and builds.
class StableHash {
public:
    StableHash& add(std::string_view s) noexcept {
        for (unsigned char c : s) {
            state_ ^= c;
            state_ *= 0x100000001b3ULL;
        }
        // separator so ("ab","c") != ("a","bc")
        state_ ^= 0xff;
        state_ *= 0x100000001b3ULL;
        return *this;
    }
    StableHash& add(std::uint64_t v) noexcept {
        for (int i = 0; i < 8; ++i) {
            state_ ^= (v >> (8 * i)) & 0xffU;
            state_ *= 0x100000001b3ULL;
        }
        return *this;
    }
    std::uint64_t value() const noexcept { return splitmix64(state_); }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
    return StableHash{}.add(base).add(stream).value();
}

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

} // namespace opevo
