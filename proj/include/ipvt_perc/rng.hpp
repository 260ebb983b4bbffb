#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>

#include "ipvt_perc/int128.hpp"

namespace ipvt_perc {

// Reproducibility discipline: every random object is driven by a 64-bit seed
// derived from (master seed, structural path) with derive_seed. Replicas,
// grid points, repair streams and end rays all get independent substreams, so
// results never depend on scheduling or thread count.

inline constexpr std::uint64_t kGolden64 = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(base + kGolden64);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + kGolden64));
  return h;
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // 53-bit mantissa uniform on [0,1).
  double next_unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform on [0,n) via 128-bit multiply-shift (bias < n / 2^64).
  std::uint32_t next_below(std::uint32_t n) {
    return static_cast<std::uint32_t>((static_cast<uint128>(eng_()) * n) >> 64);
  }

  long long poisson(double mean) {
    std::poisson_distribution<long long> dist(mean);
    return dist(eng_);
  }

  long long binomial(long long n, double p) {
    std::binomial_distribution<long long> dist(n, p);
    return dist(eng_);
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

// Inclusion test consuming exactly one u64: true with probability lambda.
// lambda = 1 maps to a threshold of 2^64, so it always includes.
inline uint128 bernoulli_threshold(double lambda) {
  if (!(lambda > 0.0) || lambda > 1.0) throw std::invalid_argument("lambda must lie in (0,1]");
  return static_cast<uint128>(static_cast<long double>(lambda) * 0x1.0p64L);
}

// Letter j of a seeded end ray is a pure function of (seed, j): first letter
// uniform on {0..d-1}, later letters uniform on {0..d-2}. Pure counter-based
// access means a materialized prefix can never change when extended.
inline std::uint8_t end_ray_letter(std::uint64_t seed, std::uint64_t index, int degree) {
  std::uint64_t u = mix64(seed + index * kGolden64 + 0x243F6A8885A308D3ull);
  std::uint32_t alphabet = (index == 0) ? static_cast<std::uint32_t>(degree)
                                        : static_cast<std::uint32_t>(degree - 1);
  return static_cast<std::uint8_t>((static_cast<uint128>(u) * alphabet) >> 64);
}

}  // namespace ipvt_perc
