#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace tarpit {

// Deterministic RNG shared by the exploration engine. mt19937_64 has a fully
// specified output sequence, and the bounded/real draws below avoid the
// implementation-defined std::uniform_*_distribution mappings, so a fixed seed
// reproduces the same stream everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Unbiased draw from [0, n): mask to the next power of two, reject overshoot.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw std::logic_error("uniform_index: empty range");
    std::uint64_t mask = n - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    for (;;) {
      std::uint64_t v = gen_() & mask;
      if (v < n) return v;
    }
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform_real() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Bernoulli with probability p of returning true.
  bool chance(double p) { return uniform_real() < p; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace tarpit
