#pragma once

#include <cstdint>
#include <random>

#include "sunvo/geometry.hpp"

namespace sunvo {

using Rng = std::mt19937_64;

/// Deterministic child seed for (base, stream, index); splitmix64 finalizer.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0)
{
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ stream) ^ index);
}

// The standard distributions are implementation-defined; these keep a given
// binary reproducible and avoid depending on distribution object state.
inline double uniform01(Rng& rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Box-Muller; one draw per call.
inline double gaussian(Rng& rng, double sigma = 1.0)
{
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n)
{
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

inline Vec3 random_unit_vector(Rng& rng)
{
  Vec3 v(gaussian(rng), gaussian(rng), gaussian(rng));
  while (v.norm() < 1e-12) v = Vec3(gaussian(rng), gaussian(rng), gaussian(rng));
  return v.normalized();
}

}  // namespace sunvo
