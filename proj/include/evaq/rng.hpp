#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include "evaq/errors.hpp"

namespace evaq {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Decorrelated per-entity seed; entity order is part of the contract.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(0x9e3779b97f4a7c15ULL + index));
}

// Deterministic samplers over std::mt19937_64 (its output sequence is pinned
// by the standard; the distributions here avoid std::*_distribution, whose
// algorithms are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Inclusive range, rejection sampling for exact uniformity.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw ConfigError("uniform_int: lo > hi");
    const std::uint64_t n =
        static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    if (n == 0) return static_cast<std::int64_t>(eng_()); // full 64-bit range
    const std::uint64_t limit =
        (std::numeric_limits<std::uint64_t>::max() / n) * n;
    std::uint64_t r;
    do {
      r = eng_();
    } while (r >= limit);
    return lo + static_cast<std::int64_t>(r % n);
  }

  // Box-Muller without caching the second variate.
  double normal(double mean = 0.0, double sd = 1.0) {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sd * r * std::cos(2.0 * 3.141592653589793 * u2);
  }

  // Knuth's product method, chunked so exp(-lambda) never underflows.
  std::int64_t poisson(double lambda) {
    if (!(lambda >= 0.0)) throw ConfigError("poisson: lambda must be >= 0");
    std::int64_t total = 0;
    while (lambda > 500.0) {
      total += poisson_chunk(500.0);
      lambda -= 500.0;
    }
    return total + poisson_chunk(lambda);
  }

  // Inversion sampling of f(d) ~ d^-gamma on [lo, hi].
  double truncated_pareto(double gamma, double lo, double hi) {
    if (!(lo > 0.0) || !(hi > lo))
      throw ConfigError("truncated_pareto: require 0 < lo < hi");
    const double u = uniform();
    const double beta = 1.0 - gamma;
    if (std::abs(beta) < 1e-9)
      return lo * std::pow(hi / lo, u);
    const double lb = std::pow(lo, beta), hb = std::pow(hi, beta);
    return std::pow(lb + u * (hb - lb), 1.0 / beta);
  }

  // Geometric on {0, 1, ...} with the given mean, clamped to [0, cap].
  std::int64_t geometric_clamped(double mean, std::int64_t cap) {
    if (!(mean > 0.0)) throw ConfigError("geometric_clamped: mean must be > 0");
    if (cap < 0) throw ConfigError("geometric_clamped: cap must be >= 0");
    const double p = 1.0 / (1.0 + mean);
    double u;
    do {
      u = uniform();
    } while (u >= 1.0 || u < 0.0);
    const double k = std::floor(std::log1p(-u) / std::log1p(-p));
    if (!(k >= 0.0)) return 0;
    return std::min<std::int64_t>(static_cast<std::int64_t>(k), cap);
  }

  std::uint64_t raw() { return eng_(); }

 private:
  std::int64_t poisson_chunk(double lambda) {
    const double limit = std::exp(-lambda);
    std::int64_t k = 0;
    double prod = 1.0;
    while (true) {
      prod *= uniform();
      if (prod <= limit) return k;
      ++k;
    }
  }

  std::mt19937_64 eng_;
};

} // namespace evaq
