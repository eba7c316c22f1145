#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace teachopt {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Substream seed for (seed, stream) pairs; independent trials and restarts
// each get their own stream so results are schedule-independent.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x9E3779B97F4A7C15ULL));
}

// Deterministic draws on top of mt19937_64. Distribution transforms are
// spelled out here rather than taken from <random>, whose distribution
// algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // uniform on [0, 1) with 53-bit resolution
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double normal() {
    // Box-Muller; u1 nudged away from zero so the log stays finite
    const double u1 = std::max(uniform01(), 0x1.0p-60);
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  // index into a probability vector (assumed to sum to 1) by inverse CDF
  int categorical(std::span<const double> p) {
    const double u = uniform01();
    double acc = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      acc += p[k];
      if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(p.size()) - 1;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace teachopt
