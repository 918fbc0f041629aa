#pragma once

#include <cstdint>

namespace vcprune {

// splitmix64: tiny, portable, and bit-reproducible across platforms, which
// std::uniform_real_distribution is not. Used for weight init and neuron
// subset selection so "same seed => same bytes" holds everywhere.
struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53 mantissa bits.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [-1, 1).
  double next_symmetric() { return 2.0 * next_unit() - 1.0; }

  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return next() % n; }
};

// Derives an independent stream from (seed, tag pair); used to give every
// (layer, matrix) its own stream so draw order never couples them.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  SplitMix64 s(seed ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xc2b2ae3d27d4eb4fULL));
  s.next();
  return s.next();
}

}  // namespace vcprune
