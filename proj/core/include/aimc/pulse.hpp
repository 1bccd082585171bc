#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "aimc/device.hpp"
#include "aimc/matrix.hpp"
#include "aimc/rng.hpp"
#include "aimc/tile.hpp"

namespace aimc {

/// Stochastic pulse streams realizing the rank-1 update alpha * x * delta^T.
///
/// In each of `bl` slots, row line i fires with probability p_row[i] and
/// column line j with p_col[j]; a coincidence at (i, j) applies one pulse of
/// polarity sign_row[i] * sign_col[j]. The coincidence probability per slot is
/// alpha |x_i delta_j| / (bl * increment), so the expected count times the
/// increment equals the requested update.
struct PulsePlan {
  int bl = 1;
  double alpha = 0.0;
  double increment = 0.0;
  std::vector<double> p_row;
  std::vector<double> p_col;
  std::vector<signed char> sign_row;
  std::vector<signed char> sign_col;

  bool is_noop() const;
};

/// bl defaults to the smallest length keeping every probability <= 1:
/// max(1, ceil(alpha * |x|_inf * |delta|_inf / increment)). An explicit
/// `bl_override` must also satisfy that bound.
PulsePlan plan_update(std::span<const double> x, std::span<const double> delta, double alpha,
                      const DeviceModel& model, std::optional<int> bl_override = std::nullopt);

/// Fires the plan against the tile. Returns the number of coincidences.
std::size_t apply_rank_update(Tile& tile, const PulsePlan& plan, Rng& rng);

/// Same as apply_rank_update but also returns the realized weight change.
Matrix apply_rank_update_realized(Tile& tile, const PulsePlan& plan, Rng& rng,
                                  std::size_t* coincidences = nullptr);

struct NoiseMoments {
  double mean;
  double variance;
};

/// Closed-form mean and variance of a single cell's pulsed update on an ideal
/// device: bl Bernoulli trials of size increment with p = alpha|x delta|/(bl*increment).
NoiseMoments noise_moments_oracle(double x, double delta, double alpha, double dw_min, int bl);

/// Pulse-write beta * values into column `col` of dst (values has one entry
/// per row). Quantized and asymmetric exactly like a gradient update.
std::size_t transfer_write(Tile& dst, std::span<const double> values, std::size_t col, double beta,
                           Rng& rng);

}  // namespace aimc
