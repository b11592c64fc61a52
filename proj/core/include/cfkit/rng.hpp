#pragma once

// Deterministic randomness helpers. std::mt19937_64 output is pinned by the
// standard, but the standard *distributions* are not, so every mapping from
// engine output to a value lives here and nowhere else. Identical (seed,
// call sequence) must give identical results on every platform.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace cfkit::rng {

using Engine = std::mt19937_64;

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent engine for a (seed, stream) pair, e.g. one per user or table.
inline Engine engine_for(uint64_t seed, uint64_t stream) {
  return Engine(splitmix64(seed ^ splitmix64(stream)));
}

// Uniform in [0, 1) with 53 random bits.
inline double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& eng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(eng);
}

// Uniform index in [0, n) via multiply-shift (Lemire).
inline size_t uniform_index(Engine& eng, size_t n) {
  return static_cast<size_t>((static_cast<__uint128_t>(eng()) * n) >> 64);
}

// Fisher-Yates.
template <typename T>
void shuffle(std::vector<T>& v, Engine& eng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = uniform_index(eng, i);
    std::swap(v[i - 1], v[j]);
  }
}

// Standard normals via Box-Muller; fills the span pairwise.
inline void fill_gaussian(std::span<double> out, Engine& eng) {
  size_t i = 0;
  while (i < out.size()) {
    double u1 = uniform01(eng);
    while (u1 <= 0.0) u1 = uniform01(eng);
    double u2 = uniform01(eng);
    double r = std::sqrt(-2.0 * std::log(u1));
    out[i++] = r * std::cos(2.0 * M_PI * u2);
    if (i < out.size()) out[i++] = r * std::sin(2.0 * M_PI * u2);
  }
}

inline double gaussian(Engine& eng) {
  double x;
  fill_gaussian(std::span<double>(&x, 1), eng);
  return x;
}

}  // namespace cfkit::rng
