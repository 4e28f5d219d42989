// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include <Eigen/Core>

namespace fedlora {

// SplitMix64 finalizer. Spreads structured (seed, tag, index) tuples into
// well-separated stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = mix64(master);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  h = mix64(h ^ c);
  return h;
}

// Stream purpose tags. Kept in one place so no two call sites collide.
namespace stream {
constexpr std::uint64_t kSketch = 1;
constexpr std::uint64_t kParticipation = 2;
constexpr std::uint64_t kBatch = 3;
constexpr std::uint64_t kDataset = 4;
constexpr std::uint64_t kPartition = 5;
constexpr std::uint64_t kProfiles = 6;
constexpr std::uint64_t kInit = 7;
constexpr std::uint64_t kBaseline = 8;
constexpr std::uint64_t kSplit = 9;
constexpr std::uint64_t kRun = 10;
}  // namespace stream

// Deterministic random stream. mt19937_64 output is pinned by the standard;
// every distribution below is built by hand on raw 64-bit draws so the
// sequence of values is bit-identical on any conforming toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection keeps it unbiased.
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller. No caching: one value per two uniforms,
  // so the stream position does not depend on call parity.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Gamma(shape, 1) via Marsaglia-Tsang, with the usual power boost for
  // shape < 1.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
    if (shape < 1.0) {
      const double u = 1.0 - uniform();  // (0, 1]
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      const double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = 1.0 - uniform();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // Symmetric Dirichlet over `n` components.
  Eigen::VectorXd dirichlet(double alpha, int n) {
    if (n <= 0) throw std::invalid_argument("dirichlet: n must be positive");
    Eigen::VectorXd g(n);
    for (;;) {
      for (int i = 0; i < n; ++i) g[i] = gamma(alpha);
      const double total = g.sum();
      if (total > 0.0) return g / total;
    }
  }

  double log_uniform(double lo, double hi) {
    if (!(lo > 0.0 && hi >= lo)) {
      throw std::invalid_argument("log_uniform: need 0 < lo <= hi");
    }
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

 private:
  static constexpr double kPi = 3.141592653589793238462643383279502884;
  std::mt19937_64 gen_;
};

}  // namespace fedlora
