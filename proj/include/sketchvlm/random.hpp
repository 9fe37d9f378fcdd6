#pragma once

// Portable seeded randomness. Only the raw mt19937_64 output is used, so
// sequences are identical across standard libraries.

#include <cstdint>
#include <random>

namespace sketchvlm {

/// splitmix64 mix of (seed, index); used to derive per-instance seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform01();
  double uniform(double lo, double hi);
  /// Uniform integer in [lo, hi], unbiased.
  std::int64_t integer(std::int64_t lo, std::int64_t hi);
  bool coin() { return (next() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace sketchvlm
