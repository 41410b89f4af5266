// SPDX-License-Identifier: Apache-2.0

#ifndef GEPSBP_RANDOM_HPP
#define GEPSBP_RANDOM_HPP

#include <cstdint>
#include <random>

namespace gepsbp {

using Rng = std::mt19937_64;

inline auto SplitMix64(std::uint64_t x) -> std::uint64_t
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31U);
}

/// Purposes of derived random streams; keeps streams for different jobs apart.
enum class Stream : std::uint64_t {
    Init = 1,
    Correction = 2,
    Variation = 3,
    Library = 4,
    Noise = 5,
    Split = 6,
    Data = 7,
};

/// Independent generator for (seed, generation, index, purpose). Identical
/// regardless of which worker thread consumes it.
inline auto DeriveRng(std::uint64_t seed, std::uint64_t generation, std::uint64_t index, Stream purpose) -> Rng
{
    auto h = SplitMix64(seed);
    h = SplitMix64(h ^ generation);
    h = SplitMix64(h ^ (index * 0xd6e8feb86659fd93ULL));
    h = SplitMix64(h ^ static_cast<std::uint64_t>(purpose));
    return Rng(h);
}

inline auto Uniform01(Rng& rng) -> double { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline auto UniformIndex(Rng& rng, std::size_t n) -> std::size_t
{
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

} // namespace gepsbp

#endif
