#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "dpflow/linalg.hpp"

namespace dpflow {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent per-item seeds.
constexpr std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed derived from a global seed and a tuple of item ids, e.g. (line, sample).
inline std::uint64_t derive_seed(std::uint64_t global, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t h = mix_seed(global);
  for (auto id : ids) h = mix_seed(h ^ mix_seed(id + 0x632be59bd9b4e019ULL));
  return h;
}

/// Uniform double in [0, 1) from the top 53 bits; independent of the standard library.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline Vec gaussian_vector(Rng& rng, int n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

inline Vec unit_vector(Rng& rng, int n) {
  Vec v;
  do {
    v = gaussian_vector(rng, n);
  } while (v.norm() < 1e-12);
  return v.normalized();
}

}  // namespace dpflow
