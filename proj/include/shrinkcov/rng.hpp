#pragma once

#include <cstdint>
#include <random>

namespace shrinkcov {

/// splitmix64 scrambler. Sequential user seeds (seed, seed+1, ...) are mapped
/// to well-separated engine states, so Monte Carlo trials may derive their
/// sub-seed as seed + trial index.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) {
    return Engine(splitmix64(seed));
}

/// Sub-seed for trial `trial` of a run seeded with `seed`.
inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) {
    return seed + trial;
}

}  // namespace shrinkcov
