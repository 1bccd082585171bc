#include "aimc/pulse.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "aimc/errors.hpp"

namespace aimc {

bool PulsePlan::is_noop() const {
  return std::all_of(p_row.begin(), p_row.end(), [](double p) { return p == 0.0; }) ||
         std::all_of(p_col.begin(), p_col.end(), [](double p) { return p == 0.0; });
}

namespace {

void check_finite(std::span<const double> v, const char* what) {
  for (double e : v)
    if (!std::isfinite(e)) throw DomainError(std::string("plan_update: non-finite ") + what);
}

signed char sign_of(double v) { return v < 0.0 ? -1 : 1; }

}  // namespace

PulsePlan plan_update(std::span<const double> x, std::span<const double> delta, double alpha,
                      const DeviceModel& model, std::optional<int> bl_override) {
  check_finite(x, "input");
  check_finite(delta, "error");
  if (!std::isfinite(alpha) || alpha < 0.0) throw DomainError("plan_update: alpha must be >= 0");

  PulsePlan plan;
  plan.alpha = alpha;
  plan.increment = model.increment();
  plan.p_row.assign(x.size(), 0.0);
  plan.p_col.assign(delta.size(), 0.0);
  plan.sign_row.resize(x.size());
  plan.sign_col.resize(delta.size());
  for (std::size_t i = 0; i < x.size(); ++i) plan.sign_row[i] = sign_of(x[i]);
  for (std::size_t j = 0; j < delta.size(); ++j) plan.sign_col[j] = sign_of(delta[j]);

  const double x_max = max_abs(x);
  const double d_max = max_abs(delta);
  const double peak = alpha * x_max * d_max / plan.increment;  // bl * (max coincidence prob)
  if (bl_override) {
    if (*bl_override < 1) throw DomainError("plan_update: bl must be >= 1");
    if (peak > *bl_override * (1.0 + 1e-12))
      throw DomainError("plan_update: bl too short, coincidence probability would exceed 1");
    plan.bl = *bl_override;
  } else {
    plan.bl = std::max(1, static_cast<int>(std::ceil(peak)));
  }
  if (peak == 0.0) return plan;

  // Split the magnitude evenly so the largest row and column probabilities match.
  const double scale = std::sqrt(alpha / (plan.bl * plan.increment));
  const double balance = std::sqrt(x_max / d_max);
  for (std::size_t i = 0; i < x.size(); ++i)
    plan.p_row[i] = std::min(1.0, std::abs(x[i]) * scale / balance);
  for (std::size_t j = 0; j < delta.size(); ++j)
    plan.p_col[j] = std::min(1.0, std::abs(delta[j]) * scale * balance);
  return plan;
}

std::size_t apply_rank_update(Tile& tile, const PulsePlan& plan, Rng& rng) {
  if (plan.p_row.size() != tile.rows() || plan.p_col.size() != tile.cols())
    throw IndexError("apply_rank_update: plan shape does not match tile");
  if (plan.is_noop()) return 0;

  std::vector<std::size_t> rows_fired;
  std::vector<std::size_t> cols_fired;
  rows_fired.reserve(tile.rows());
  cols_fired.reserve(tile.cols());
  std::size_t coincidences = 0;
  for (int slot = 0; slot < plan.bl; ++slot) {
    rows_fired.clear();
    cols_fired.clear();
    for (std::size_t i = 0; i < plan.p_row.size(); ++i)
      if (plan.p_row[i] > 0.0 && uniform01(rng) < plan.p_row[i]) rows_fired.push_back(i);
    for (std::size_t j = 0; j < plan.p_col.size(); ++j)
      if (plan.p_col[j] > 0.0 && uniform01(rng) < plan.p_col[j]) cols_fired.push_back(j);
    for (std::size_t i : rows_fired) {
      for (std::size_t j : cols_fired) {
        tile.pulse(i, j, plan.sign_row[i] * plan.sign_col[j]);
        assert(tile.at(i, j) >= tile.model().weight_min() &&
               tile.at(i, j) <= tile.model().weight_max());
      }
    }
    coincidences += rows_fired.size() * cols_fired.size();
  }
  return coincidences;
}

Matrix apply_rank_update_realized(Tile& tile, const PulsePlan& plan, Rng& rng,
                                  std::size_t* coincidences) {
  Matrix before = tile.weights();
  const std::size_t n = apply_rank_update(tile, plan, rng);
  if (coincidences) *coincidences = n;
  Matrix delta = tile.weights();
  delta.add_scaled(before, -1.0);
  return delta;
}

NoiseMoments noise_moments_oracle(double x, double delta, double alpha, double dw_min, int bl) {
  if (bl < 1 || !(dw_min > 0.0)) throw DomainError("noise_moments_oracle: need bl >= 1, dw_min > 0");
  const double target = alpha * x * delta;
  const double p = std::abs(target) / (bl * dw_min);
  if (p > 1.0) throw DomainError("noise_moments_oracle: coincidence probability exceeds 1");
  return {target, bl * dw_min * dw_min * p * (1.0 - p)};
}

std::size_t transfer_write(Tile& dst, std::span<const double> values, std::size_t col, double beta,
                           Rng& rng) {
  if (col >= dst.cols()) throw IndexError("transfer_write: column out of range");
  if (values.size() != dst.rows()) throw IndexError("transfer_write: values length != rows");
  std::vector<double> one_hot(dst.cols(), 0.0);
  one_hot[col] = 1.0;
  const PulsePlan plan = plan_update(values, one_hot, beta, dst.model());
  return apply_rank_update(dst, plan, rng);
}

}  // namespace aimc
