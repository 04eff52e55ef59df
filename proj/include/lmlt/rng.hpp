#pragma once

#include <cstdint>

namespace lmlt {

// splitmix64 stream. The sequence is part of the weight-init contract, so any
// implementation seeded identically reproduces the same weights bit for bit:
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// uniform():  (next_u64() >> 11) * 2^-53, in [0, 1)
// normal():   Box-Muller on two consecutive uniforms u1, u2:
//             sqrt(-2 ln(1 - u1)) * cos(2 pi u2); the sine branch is discarded.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace lmlt
