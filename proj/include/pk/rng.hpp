#pragma once

// Seeded randomness. mt19937_64 has a fully specified output sequence, and the
// conversions below avoid the implementation-defined std distributions, so a
// seed reproduces the same samples on every conforming platform.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace pk {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

  // Independent stream for sample i of a run seeded with `seed`.
  static Rng stream(std::uint64_t seed, std::uint64_t i) {
    return Rng(splitmix64(seed) ^ splitmix64(i + 0x632be59bd9b4e019ULL));
  }

  std::uint64_t next() { return eng_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Box-Muller.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform in the closed ball of the given radius in R^d.
  Eigen::VectorXd ball(int d, double radius) {
    Eigen::VectorXd v(d);
    if (d == 0) return v;
    double n = 0.0;
    while (n < 1e-12) {
      for (int i = 0; i < d; ++i) v[i] = normal();
      n = v.norm();
    }
    const double r = radius * std::pow(uniform(), 1.0 / d);
    return v * (r / n);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace pk
