#pragma once

#include <cstdint>
#include <random>

namespace qpq {

// Generator used by every stochastic routine in the library. Any
// UniformRandomBitGenerator works with the templated APIs; the harness
// always uses this one so reports are reproducible.
using rng_type = std::mt19937_64;

inline constexpr const char* rng_algorithm = "mt19937_64; per-trial seed = splitmix64(seed, trial)";

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream for trial `index` of a run seeded with `seed`.
inline rng_type trial_rng(std::uint64_t seed, std::uint64_t index) {
    return rng_type{splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL))};
}

template <class Rng>
double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

template <class Rng>
std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

} // namespace qpq
