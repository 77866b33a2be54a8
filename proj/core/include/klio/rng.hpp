#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace klio {

// All randomness flows through an explicitly seeded engine. Draws below are
// built from raw 64-bit outputs so results do not depend on the standard
// library's distribution implementations.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
  // 53-bit mantissa draw in [0, 1).
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n).
inline std::int64_t uniform_index(Rng& rng, std::int64_t n) {
  return static_cast<std::int64_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

// Standard normal via Box-Muller (cosine branch only).
inline double normal01(Rng& rng) {
  double u1 = uniform01(rng);
  if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

// Deterministic per-stream engines derived from a root seed (one stream per
// episode/run so episode generation can be sharded).
inline Rng derive_stream(std::uint64_t root_seed, std::uint64_t stream) {
  // splitmix64 mixing of (root_seed, stream)
  std::uint64_t z = root_seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z = z ^ (z >> 31);
  return Rng(z);
}

}  // namespace klio
