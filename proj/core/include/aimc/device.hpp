#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace aimc {

enum class DeviceKind { Ideal, AsymmetricLinear, Custom };

std::string to_string(DeviceKind kind);
DeviceKind device_kind_from_string(const std::string& name);

/// Response curve over the normalized conductance domain.
using ResponseFn = std::function<double(double)>;

/// Monotone piecewise-linear response table, linearly interpolated between
/// knots and clamped to the end values outside them.
class PiecewiseLinear {
 public:
  PiecewiseLinear() = default;
  PiecewiseLinear(std::vector<double> knots, std::vector<double> values);

  double operator()(double c) const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
};

/// Pulse response model of one memristive cell.
///
/// Bounds and the per-pulse increment are stated in the normalized
/// conductance domain of the device; tiles store logical weights
/// w = kappa * c, so every query below takes a logical weight and evaluates
/// the response at w / kappa. With kappa = 1 (the default) both views agree.
///
/// The symmetric point is fixed at zero: q_plus(0) == q_minus(0).
class DeviceModel {
 public:
  static DeviceModel ideal(double tau_min, double tau_max, double dw_min, double kappa = 1.0);

  /// q_plus(c) = 1 - c / tau_max, q_minus(c) = 1 - c / tau_min.
  static DeviceModel asymmetric_linear(double tau_min, double tau_max, double dw_min,
                                       double kappa = 1.0);

  /// Arbitrary closed-form curves. Validated on a 1001-point grid.
  static DeviceModel custom(double tau_min, double tau_max, double dw_min, ResponseFn q_plus,
                            ResponseFn q_minus, double kappa = 1.0);

  /// Tabulated curves; kept alongside the callables so the model can be
  /// serialized and hashed.
  static DeviceModel custom(double tau_min, double tau_max, double dw_min, PiecewiseLinear q_plus,
                            PiecewiseLinear q_minus, double kappa = 1.0);

  DeviceKind kind() const { return kind_; }
  double tau_min() const { return tau_min_; }
  double tau_max() const { return tau_max_; }
  double dw_min() const { return dw_min_; }
  double kappa() const { return kappa_; }

  /// Logical-weight bounds and per-pulse increment.
  double weight_min() const { return kappa_ * tau_min_; }
  double weight_max() const { return kappa_ * tau_max_; }
  double increment() const { return kappa_ * dw_min_; }

  double q_plus(double w) const;
  double q_minus(double w) const;
  double symmetric_f(double w) const;
  double asymmetric_g(double w) const;
  /// q_plus * q_minus == F^2 - G^2.
  double saturation_h(double w) const;

  /// floor((tau_max - tau_min) / dw_min)
  long n_states() const;

  double to_conductance(double w) const { return w / kappa_; }

  /// Weight after one positive (sign > 0) or negative pulse, clamped to the
  /// logical bounds. Requires w already within bounds.
  double pulse(double w, int sign) const;

  /// Stable hash over kind, bounds, increment, kappa and custom tables.
  std::uint64_t hash() const;
  std::string describe() const;

  const PiecewiseLinear* q_plus_table() const { return has_tables_ ? &table_plus_ : nullptr; }
  const PiecewiseLinear* q_minus_table() const { return has_tables_ ? &table_minus_ : nullptr; }

 private:
  DeviceModel(DeviceKind kind, double tau_min, double tau_max, double dw_min, double kappa);

  void check_domain(double w) const;
  double raw_plus(double c) const;
  double raw_minus(double c) const;
  void validate_custom() const;

  DeviceKind kind_;
  double tau_min_;
  double tau_max_;
  double dw_min_;
  double kappa_;
  ResponseFn custom_plus_;
  ResponseFn custom_minus_;
  bool has_tables_ = false;
  PiecewiseLinear table_plus_;
  PiecewiseLinear table_minus_;
};

/// kappa = sqrt(sigma * L_G * W_max) * (gamma^N * dw_min)^(-1/4).
/// Never applied automatically: L_G and W_max are analysis constants.
double theoretical_kappa(double sigma, double lipschitz_g, double w_max, double gamma, int n_top,
                         double dw_min);

}  // namespace aimc
