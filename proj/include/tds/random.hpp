#pragma once

#include <cstdint>
#include <random>

namespace tds {

using Rng = std::mt19937_64;

/// Independent generator for one phase of a seeded computation.
inline Rng substream(std::uint64_t seed, std::uint64_t phase) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(phase), static_cast<std::uint32_t>(phase >> 32),
                    0x7d5u};
  return Rng(seq);
}

/// Draws a fresh 64-bit seed from an existing generator.
inline std::uint64_t derive_seed(Rng& rng) { return rng(); }

}  // namespace tds

#include <Eigen/Core>

#include <cmath>

namespace tds {

/// Uniform point in the radius-R ball of R^d: a normalized Gaussian
/// direction scaled by R * U^(1/d).
inline Eigen::VectorXd uniform_ball_point(Eigen::Index d, double radius, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd g(d);
  double n2 = 0.0;
  do {
    for (Eigen::Index i = 0; i < d; ++i) g(i) = gauss(rng);
    n2 = g.squaredNorm();
  } while (n2 == 0.0);
  double r = radius * std::pow(unif(rng), 1.0 / static_cast<double>(d));
  return g * (r / std::sqrt(n2));
}

}  // namespace tds
