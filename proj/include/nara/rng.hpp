#pragma once

#include <cstdint>
#include <random>

namespace nara {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t kDefaultSeed = 0;

enum class DrawPurpose : std::uint64_t { draft = 1, resample = 2 };

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Order-sensitive hash of a key tuple; used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept;

/// Deterministic generator for one (seed, absolute position, purpose) key.
/// Pure-AR sampling draws from the resample substream at every position, so
/// a generation run that re-samples everywhere consumes the same draws.
Rng substream(std::uint64_t seed, std::uint64_t position, DrawPurpose purpose);

double standard_normal(Rng& rng);
double uniform(Rng& rng, double lo, double hi);

}  // namespace nara
