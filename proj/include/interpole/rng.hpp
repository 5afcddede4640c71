#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace interpole {

/// Seeded random source with explicitly-coded distributions so that streams
/// are reproducible across standard libraries (std:: distribution objects are
/// implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1].
  double uniform_positive() { return 1.0 - uniform(); }

  double exponential() { return -std::log(uniform_positive()); }

  /// Box-Muller; two uniforms per draw, no cached spare.
  double normal() {
    const double u1 = uniform_positive();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    return static_cast<int>(uniform() * n) % n;
  }

  /// Sample an index from an (unnormalized is fine) nonnegative weight vector.
  int categorical(const Eigen::VectorXd& weights) {
    const double total = weights.sum();
    if (!(total > 0.0)) throw std::invalid_argument("categorical: weights sum to zero");
    double u = uniform() * total;
    for (int i = 0; i < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    // fall through on rounding: last index with positive mass
    for (int i = static_cast<int>(weights.size()) - 1; i >= 0; --i)
      if (weights[i] > 0.0) return i;
    return static_cast<int>(weights.size()) - 1;
  }

  /// Uniform point on the probability simplex (symmetric Dirichlet(1)).
  Eigen::VectorXd simplex_uniform(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = exponential();
    v /= v.sum();
    return v;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace interpole
