#pragma once

#include <cstdint>

namespace celab {

// splitmix64 finalizer (full avalanche).
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based generator: draw i of stream `seed` is a pure function of
// (seed, i), so results cannot depend on worker count or scheduling.
constexpr std::uint64_t counter_rng(std::uint64_t seed, std::uint64_t counter) {
    return mix64(seed ^ mix64(counter));
}

// Uniform double in [0, 1).
constexpr double u01(std::uint64_t seed, std::uint64_t counter) {
    return static_cast<double>(counter_rng(seed, counter) >> 11) * 0x1.0p-53;
}

} // namespace celab
