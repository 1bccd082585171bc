#include "aimc/problems.hpp"

#include <cmath>
#include <random>

#include "aimc/errors.hpp"

namespace aimc {

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::None:
      return "none";
    case NoiseKind::Gaussian:
      return "gaussian";
    case NoiseKind::TwoPoint:
      return "two_point";
  }
  return "unknown";
}

NoiseKind noise_kind_from_string(const std::string& name) {
  if (name == "none") return NoiseKind::None;
  if (name == "gaussian") return NoiseKind::Gaussian;
  if (name == "two_point") return NoiseKind::TwoPoint;
  throw ConfigError("unknown noise kind '" + name + "'");
}

double two_point_noise(double w, double sigma, std::size_t dim, double tau_max, Rng& rng) {
  if (dim == 0 || !(tau_max > 0.0)) throw DomainError("two_point_noise: bad dimension or bound");
  const double p = 0.5 * (1.0 - w / tau_max);
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("two_point_noise: |w| exceeds tau_max");
  const double s = sigma / std::sqrt(static_cast<double>(dim));
  const bool plus = uniform01(rng) < p;
  // At p in {0, 1} the selected branch has zero magnitude.
  if (plus) return p >= 1.0 ? 0.0 : s * std::sqrt((1.0 - p) / p);
  return p <= 0.0 ? 0.0 : -s * std::sqrt(p / (1.0 - p));
}

std::vector<double> quadratic_grad(std::span<const double> w, std::span<const double> w_star,
                                   double lipschitz, const NoiseModel& noise, Rng& rng) {
  if (w.size() != w_star.size()) throw IndexError("quadratic_grad: dimension mismatch");
  std::vector<double> g(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) g[i] = lipschitz * (w[i] - w_star[i]);
  switch (noise.kind) {
    case NoiseKind::None:
      break;
    case NoiseKind::Gaussian: {
      if (noise.sigma == 0.0) break;
      std::normal_distribution<double> normal(0.0, noise.sigma / std::sqrt(double(w.size())));
      for (double& e : g) e += normal(rng);
      break;
    }
    case NoiseKind::TwoPoint: {
      for (double v : w)
        if (v != w.front())
          throw DomainError("two-point noise requires all weight coordinates to be equal");
      const double eps = two_point_noise(w.front(), noise.sigma, w.size(), noise.tau_max, rng);
      for (double& e : g) e += eps;
      break;
    }
  }
  return g;
}

double QuadraticProblem::dist2(std::span<const double> w) const {
  if (w.size() != w_star.size()) throw IndexError("quadratic: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += (w[i] - w_star[i]) * (w[i] - w_star[i]);
  return s;
}

double QuadraticProblem::loss(std::span<const double> w) const { return 0.5 * lipschitz * dist2(w); }

double toy_target_from_index(std::uint32_t k) {
  constexpr std::uint32_t kLevels = 65535;  // 2^16 - 1
  if (k > kLevels) throw DomainError("toy target index exceeds 16 bits");
  return -1.0 + static_cast<double>(k) * 2.0 / static_cast<double>(kLevels);
}

double toy_target_16bit(Rng& rng) {
  return toy_target_from_index(static_cast<std::uint32_t>(rng() >> 48));
}

QuadraticProblem toy_problem(double target) {
  QuadraticProblem p;
  p.lipschitz = 2.0;
  p.w_star = {target};
  return p;
}

}  // namespace aimc
