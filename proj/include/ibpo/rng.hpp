#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace ibpo {

std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent stream seed from a base seed plus up to four stream
// labels. Every random draw in the library flows through seeds built here, so
// runs are reproducible from a single top-level seed.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0, std::uint64_t d = 0);

// mt19937_64 with hand-rolled draw helpers. The standard distributions are not
// pinned across library implementations; these are.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

  // Uniform over [0, bound), bound >= 1. Rejection sampling, no modulo bias.
  std::size_t uniform_index(std::size_t bound);

  // Index draw from a probability vector; trailing mass goes to the last entry.
  std::size_t categorical(std::span<const double> probs);

 private:
  std::mt19937_64 engine_;
};

}  // namespace ibpo
