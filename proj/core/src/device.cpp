#include "aimc/device.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "aimc/errors.hpp"

namespace aimc {

std::string to_string(DeviceKind kind) {
  switch (kind) {
    case DeviceKind::Ideal:
      return "ideal";
    case DeviceKind::AsymmetricLinear:
      return "asymmetric_linear";
    case DeviceKind::Custom:
      return "custom";
  }
  return "unknown";
}

DeviceKind device_kind_from_string(const std::string& name) {
  if (name == "ideal") return DeviceKind::Ideal;
  // Soft-bounds devices reduce to the asymmetric linear model.
  if (name == "asymmetric_linear" || name == "softbounds" || name == "soft_bounds")
    return DeviceKind::AsymmetricLinear;
  if (name == "custom") return DeviceKind::Custom;
  throw ConfigError("unknown device kind '" + name + "'");
}

PiecewiseLinear::PiecewiseLinear(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.size() < 2 || knots_.size() != values_.size())
    throw ConfigError("piecewise-linear table needs >= 2 knots and matching values");
  for (std::size_t i = 1; i < knots_.size(); ++i)
    if (!(knots_[i] > knots_[i - 1]))
      throw ConfigError("piecewise-linear knots must be strictly increasing");
  const bool increasing = values_.back() >= values_.front();
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (increasing ? values_[i] < values_[i - 1] : values_[i] > values_[i - 1])
      throw ConfigError("piecewise-linear response must be monotone");
  }
}

double PiecewiseLinear::operator()(double c) const {
  if (c <= knots_.front()) return values_.front();
  if (c >= knots_.back()) return values_.back();
  auto it = std::upper_bound(knots_.begin(), knots_.end(), c);
  const std::size_t hi = static_cast<std::size_t>(it - knots_.begin());
  const std::size_t lo = hi - 1;
  const double t = (c - knots_[lo]) / (knots_[hi] - knots_[lo]);
  return values_[lo] + t * (values_[hi] - values_[lo]);
}

DeviceModel::DeviceModel(DeviceKind kind, double tau_min, double tau_max, double dw_min,
                         double kappa)
    : kind_(kind), tau_min_(tau_min), tau_max_(tau_max), dw_min_(dw_min), kappa_(kappa) {
  if (!std::isfinite(tau_min) || !std::isfinite(tau_max) || !std::isfinite(dw_min) ||
      !std::isfinite(kappa))
    throw ConfigError("device parameters must be finite");
  if (!(tau_min < 0.0 && 0.0 < tau_max))
    throw ConfigError("device bounds must satisfy tau_min < 0 < tau_max");
  if (!(dw_min > 0.0) || dw_min > tau_max - tau_min)
    throw ConfigError("dw_min must be in (0, tau_max - tau_min]");
  if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
}

DeviceModel DeviceModel::ideal(double tau_min, double tau_max, double dw_min, double kappa) {
  return {DeviceKind::Ideal, tau_min, tau_max, dw_min, kappa};
}

DeviceModel DeviceModel::asymmetric_linear(double tau_min, double tau_max, double dw_min,
                                           double kappa) {
  return {DeviceKind::AsymmetricLinear, tau_min, tau_max, dw_min, kappa};
}

DeviceModel DeviceModel::custom(double tau_min, double tau_max, double dw_min, ResponseFn q_plus,
                                ResponseFn q_minus, double kappa) {
  if (!q_plus || !q_minus) throw ConfigError("custom device needs both response curves");
  DeviceModel m{DeviceKind::Custom, tau_min, tau_max, dw_min, kappa};
  m.custom_plus_ = std::move(q_plus);
  m.custom_minus_ = std::move(q_minus);
  m.validate_custom();
  return m;
}

DeviceModel DeviceModel::custom(double tau_min, double tau_max, double dw_min,
                                PiecewiseLinear q_plus, PiecewiseLinear q_minus, double kappa) {
  DeviceModel m = custom(tau_min, tau_max, dw_min, ResponseFn(q_plus), ResponseFn(q_minus), kappa);
  m.has_tables_ = true;
  m.table_plus_ = std::move(q_plus);
  m.table_minus_ = std::move(q_minus);
  return m;
}

void DeviceModel::validate_custom() const {
  constexpr int kGrid = 1001;
  constexpr double kTol = 1e-9;
  if (std::abs(custom_plus_(tau_max_)) > kTol)
    throw ConfigError("custom device: q_plus(tau_max) must be 0");
  if (std::abs(custom_minus_(tau_min_)) > kTol)
    throw ConfigError("custom device: q_minus(tau_min) must be 0");
  if (std::abs(custom_plus_(0.0) - custom_minus_(0.0)) > kTol)
    throw ConfigError("custom device: symmetric point must be at 0 (q_plus(0) == q_minus(0))");
  for (int k = 0; k < kGrid; ++k) {
    const double c = tau_min_ + (tau_max_ - tau_min_) * k / (kGrid - 1);
    const double up = custom_plus_(c);
    const double down = custom_minus_(c);
    if (!std::isfinite(up) || !std::isfinite(down) || up < -kTol || down < -kTol)
      throw ConfigError("custom device: responses must be finite and nonnegative");
    if (k < kGrid - 1 && !(up > 0.0))
      throw ConfigError("custom device: q_plus must be positive below tau_max");
    if (k > 0 && !(down > 0.0))
      throw ConfigError("custom device: q_minus must be positive above tau_min");
  }
}

void DeviceModel::check_domain(double w) const {
  const double c = w / kappa_;
  if (!(c >= tau_min_ && c <= tau_max_)) {
    std::ostringstream os;
    os << "weight " << w << " outside device range [" << weight_min() << ", " << weight_max()
       << "]";
    throw DomainError(os.str());
  }
}

double DeviceModel::raw_plus(double c) const {
  switch (kind_) {
    case DeviceKind::Ideal:
      return 1.0;
    case DeviceKind::AsymmetricLinear:
      return 1.0 - c / tau_max_;
    case DeviceKind::Custom:
      return custom_plus_(c);
  }
  return 0.0;
}

double DeviceModel::raw_minus(double c) const {
  switch (kind_) {
    case DeviceKind::Ideal:
      return 1.0;
    case DeviceKind::AsymmetricLinear:
      return 1.0 - c / tau_min_;
    case DeviceKind::Custom:
      return custom_minus_(c);
  }
  return 0.0;
}

double DeviceModel::q_plus(double w) const {
  check_domain(w);
  return raw_plus(w / kappa_);
}

double DeviceModel::q_minus(double w) const {
  check_domain(w);
  return raw_minus(w / kappa_);
}

double DeviceModel::symmetric_f(double w) const { return 0.5 * (q_minus(w) + q_plus(w)); }

double DeviceModel::asymmetric_g(double w) const { return 0.5 * (q_minus(w) - q_plus(w)); }

double DeviceModel::saturation_h(double w) const { return q_plus(w) * q_minus(w); }

long DeviceModel::n_states() const {
  // Guard against (1 - 0.2) / 0.2 style round-off landing just below an integer.
  const double ratio = (tau_max_ - tau_min_) / dw_min_;
  return static_cast<long>(std::floor(ratio * (1.0 + 1e-12)));
}

double DeviceModel::pulse(double w, int sign) const {
  const double c = w / kappa_;
  double next = sign > 0 ? w + increment() * raw_plus(c) : w - increment() * raw_minus(c);
  return std::clamp(next, weight_min(), weight_max());
}

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a(std::uint64_t h, double v) { return fnv1a(h, &v, sizeof v); }

}  // namespace

std::uint64_t DeviceModel::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto k = static_cast<std::uint32_t>(kind_);
  h = fnv1a(h, &k, sizeof k);
  for (double v : {tau_min_, tau_max_, dw_min_, kappa_}) h = fnv1a(h, v);
  if (has_tables_) {
    for (const auto* t : {&table_plus_, &table_minus_}) {
      for (double v : t->knots()) h = fnv1a(h, v);
      for (double v : t->values()) h = fnv1a(h, v);
    }
  }
  return h;
}

std::string DeviceModel::describe() const {
  std::ostringstream os;
  os << to_string(kind_) << "(tau=[" << tau_min_ << ", " << tau_max_ << "], dw_min=" << dw_min_
     << ", kappa=" << kappa_ << ", n_states=" << n_states() << ")";
  return os.str();
}

double theoretical_kappa(double sigma, double lipschitz_g, double w_max, double gamma, int n_top,
                         double dw_min) {
  if (!(sigma > 0.0 && lipschitz_g > 0.0 && w_max > 0.0 && gamma > 0.0 && dw_min > 0.0 &&
        n_top >= 0))
    throw DomainError("theoretical_kappa: all inputs must be positive");
  return std::sqrt(sigma * lipschitz_g * w_max) *
         std::pow(std::pow(gamma, n_top) * dw_min, -0.25);
}

}  // namespace aimc
