#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace ccbir {

// All randomness in the toolkit flows through these helpers. std::mt19937_64
// has a standardized algorithm, but the std distributions do not, so the
// draws below are implemented by hand to keep seeded pipelines bitwise
// reproducible across standard libraries.
using Rng = std::mt19937_64;

// splitmix64 finalizer; decorrelates derived stream seeds.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix_seed(seed ^ mix_seed(stream));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Uniform double in [0,1) with 53 random bits.
inline double uniform_real(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_real(rng);
}

// Unbiased integer in [0, n) by rejection.
inline std::uint64_t uniform_int(Rng& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

// Box-Muller without the cached spare, so the draw count per call is fixed.
inline double normal(Rng& rng) {
    const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform_real(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

// Fisher-Yates with the in-house bounded draw.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(uniform_int(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace ccbir
