#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace morphevo {

using Rng = std::mt19937_64;

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Order-sensitive combination of seed material into a single stream seed.
constexpr std::uint64_t hash_seed(std::initializer_list<std::uint64_t> parts) noexcept
{
    std::uint64_t h = 0x6a09e667f3bcc909ULL;
    for (auto p : parts)
        h = mix64(h ^ mix64(p));
    return h;
}

inline Rng make_rng(std::initializer_list<std::uint64_t> parts)
{
    return Rng(hash_seed(parts));
}

inline int uniform_int(Rng& rng, int lo, int hi)
{
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double uniform01(Rng& rng)
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

} // namespace morphevo
