#include "ibpo/rng.hpp"

#include <stdexcept>

namespace ibpo {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                       std::uint64_t c, std::uint64_t d) {
  std::uint64_t s = splitmix64(base);
  s = splitmix64(s ^ a);
  s = splitmix64(s ^ b);
  s = splitmix64(s ^ c);
  s = splitmix64(s ^ d);
  return s;
}

std::size_t Rng::uniform_index(std::size_t bound) {
  if (bound == 0) {
    throw std::invalid_argument("rng: uniform_index bound must be positive");
  }
  const std::uint64_t n = bound;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v = engine_();
  while (v >= limit) {
    v = engine_();
  }
  return static_cast<std::size_t>(v % n);
}

std::size_t Rng::categorical(std::span<const double> probs) {
  if (probs.empty()) {
    throw std::invalid_argument("rng: categorical over empty support");
  }
  const double u = uniform01();
  double cdf = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    cdf += probs[i];
    if (u < cdf) {
      return i;
    }
  }
  return probs.size() - 1;
}

}  // namespace ibpo
