#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aimc/rng.hpp"

namespace aimc {

enum class NoiseKind {
  None,
  /// eps ~ N(0, sigma^2 / D) per coordinate.
  Gaussian,
  /// Two-point lower-bound construction: eps = e * 1 with e taking
  /// +s*sqrt((1-p)/p) w.p. p and -s*sqrt(p/(1-p)) otherwise, s = sigma/sqrt(D),
  /// p = (1 - w/tau_max)/2. Requires all coordinates of W equal.
  TwoPoint,
};

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& name);

struct NoiseModel {
  NoiseKind kind = NoiseKind::None;
  double sigma = 0.0;
  /// Saturation bound entering p for the two-point construction.
  double tau_max = 1.0;
};

/// One draw of the two-point noise scalar for replicated weight value w.
double two_point_noise(double w, double sigma, std::size_t dim, double tau_max, Rng& rng);

/// Stochastic gradient of f(W) = (L/2) |W - W*|^2: L (W - W*) + eps.
std::vector<double> quadratic_grad(std::span<const double> w, std::span<const double> w_star,
                                   double lipschitz, const NoiseModel& noise, Rng& rng);

/// Quadratic objective f(W) = (L/2) |W - W*|^2 on a flat parameter vector.
struct QuadraticProblem {
  double lipschitz = 1.0;
  std::vector<double> w_star;
  NoiseModel noise;

  std::size_t dim() const { return w_star.size(); }
  double loss(std::span<const double> w) const;
  double dist2(std::span<const double> w) const;
  std::vector<double> gradient(std::span<const double> w, Rng& rng) const {
    return quadratic_grad(w, w_star, lipschitz, noise, rng);
  }
};

/// -1 + k * 2 / (2^16 - 1) for k in [0, 2^16 - 1].
double toy_target_from_index(std::uint32_t k);
/// Draws k uniformly and maps it through toy_target_from_index.
double toy_target_16bit(Rng& rng);

/// The least-squares toy (w - b)^2 as a quadratic with L = 2, W* = b.
QuadraticProblem toy_problem(double target);

}  // namespace aimc
