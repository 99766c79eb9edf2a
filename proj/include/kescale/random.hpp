#pragma once

/// \file random.hpp
/// Seeded sampling with results independent of the standard library's distributions.

#include <kescale/jet.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace kescale {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal() {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    const double v = uniform();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
  }

  cplx complex_normal() {
    const double re = normal();
    const double im = normal();
    return {re, im};
  }

  /// Uniform point of the Euclidean ball of the given radius in C^n.
  CVec in_ball(int n, double radius) {
    CVec z(static_cast<std::size_t>(n));
    double s = 0.0;
    for (auto& x : z) {
      x = complex_normal();
      s += std::norm(x);
    }
    const double r = radius * std::pow(uniform(), 1.0 / (2.0 * n)) / std::sqrt(s);
    for (auto& x : z) x *= r;
    return z;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace kescale
