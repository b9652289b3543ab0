#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace cabb {

using Rng = std::mt19937_64;

// Explicit draw helpers so that sequences depend only on the engine state,
// not on the standard library's distribution implementations.
inline double uniform_unit(Rng& rng) {
    return std::ldexp(static_cast<double>(rng() >> 11), -53);
}

inline double uniform_real(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(rng);
}

inline double log_uniform(Rng& rng, double lo, double hi) {
    return std::exp(uniform_real(rng, std::log(lo), std::log(hi)));
}

inline double exponential(Rng& rng, double mean) {
    double u = uniform_unit(rng);
    if (u >= 1.0) u = std::nextafter(1.0, 0.0);
    return -mean * std::log1p(-u);
}

inline double normal(Rng& rng, double mu, double sigma) {
    // Box-Muller, one value per call.
    double u1 = uniform_unit(rng);
    double u2 = uniform_unit(rng);
    if (u1 <= 0.0) u1 = std::ldexp(1.0, -53);
    return mu + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
    // inclusive bounds
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(rng() % span);
}

} // namespace cabb
