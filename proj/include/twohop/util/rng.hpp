#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace twohop::util {

// Unbiased draw from [0, n) with explicit arithmetic so results are identical
// across standard-library implementations (std::shuffle and the distribution
// classes make no such guarantee).
inline std::uint64_t rand_below(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return r % n;
}

template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = (std::size_t)rand_below(rng, i);
        std::swap(v[i - 1], v[j]);
    }
}

// Uniform in (0, 1), 53-bit mantissa.
inline double rand_unit(std::mt19937_64& rng) {
    double u;
    do {
        u = (double)(rng() >> 11) * 0x1.0p-53;
    } while (u <= 0.0);
    return u;
}

// Box-Muller; std::normal_distribution output is implementation-defined.
inline double rand_normal(std::mt19937_64& rng) {
    const double u1 = rand_unit(rng);
    const double u2 = rand_unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace twohop::util
