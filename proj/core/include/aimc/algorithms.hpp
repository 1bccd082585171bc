#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aimc/composite.hpp"
#include "aimc/matrix.hpp"
#include "aimc/rng.hpp"
#include "aimc/tile.hpp"

namespace aimc {

enum class Algorithm { AnalogSgd, TikiTakaV1, TikiTakaV2, MixedPrecision, Residual };

std::string to_string(Algorithm algo);
Algorithm algorithm_from_string(const std::string& name);

/// Hyperparameters of one analog layer trainer.
struct TrainerSettings {
  Algorithm algorithm = Algorithm::AnalogSgd;
  /// Gradient learning rate (the auxiliary-tile rate for Tiki-Taka).
  double alpha = 0.1;
  /// Residual: rate of writes into tile n, one entry per receiving tile
  /// (size N). Tiki-Taka: a single entry for the aux -> core transfer.
  std::vector<double> transfer_lr;
  /// Residual: number of tiles (N + 1).
  std::size_t num_tiles = 1;
  /// Residual: tile scales in tile order (tile 0 first), size num_tiles.
  std::vector<double> scales;
  /// Residual: inner-loop lengths T_1..T_N.
  std::vector<std::int64_t> transfer_every;
  bool warm_start = true;
  /// Tiki-Taka transfer period n_s and the read-out scale of the aux tile.
  std::int64_t tt_every = 2;
  double tt_gamma = 0.0;
  /// TT-v2: fraction of a buffer column cleared after it is written.
  double ttv2_decay = 1.0;
  /// Loss-history ring-buffer capacity for the plateau detector.
  std::size_t history_capacity = 64;
};

/// Default per-tile transfer rates 0.1 * 1.2^n for n = 0..N-1.
std::vector<double> default_transfer_lr(std::size_t n_edges);

/// Mutable per-layer trainer state.
struct TrainerState {
  Algorithm algo = Algorithm::AnalogSgd;
  double alpha = 0.0;
  std::vector<double> beta;
  /// Warm-start target tile k; equals N once warm start is over.
  std::size_t warm_k = 0;
  std::deque<double> loss_history;
  std::size_t history_capacity = 64;
  /// TT-v2 filter buffer or MP gradient accumulator.
  std::optional<Matrix> digital_buffer;
  /// MP programming threshold (one device increment).
  double transfer_threshold = 0.0;
  /// Transfer events written into each tile.
  std::vector<std::int64_t> transfers_into;
  std::vector<std::int64_t> warm_switch_steps;
};

struct StepStats {
  std::size_t pulses = 0;
  std::size_t transfers = 0;
};

/// Mixed-precision programming outcome.
struct MpResult {
  std::size_t pulses = 0;
};

/// One Analog SGD step: pulse-update the tile with -alpha * x * delta^T,
/// where x * delta^T is the gradient.
std::size_t analog_sgd_step(Tile& tile, std::span<const double> x, std::span<const double> delta,
                            double alpha, Rng& rng);

/// Plateau detector driving the warm-start switch.
/// k <= 3: the last loss rose. k > 3: at least two rises among the last five
/// transitions.
bool loss_plateau(std::span<const double> history, std::size_t k);
bool loss_plateau(const std::deque<double>& history, std::size_t k);

/// Mixed precision: acc -= alpha * x * delta^T exactly, then every cell with
/// |acc| >= increment receives floor(|acc| / increment) deterministic pulses
/// and keeps the remainder.
MpResult mp_step(Tile& tile, Matrix& accumulator, std::span<const double> x,
                 std::span<const double> delta, double alpha);

/// Applies floor(|acc|/increment) pulses per cell; exposed for testing the
/// threshold rule in isolation.
std::size_t mp_program(Tile& tile, Matrix& accumulator);

/// Trains one layer's analog weights with a chosen algorithm. Owns the
/// composite, the per-tile random streams and the trainer state.
///
/// Tile layout per algorithm (tile 0 is coarsest, the last tile receives the
/// gradient):
///   AnalogSgd, MixedPrecision: [W]
///   TikiTakaV1, TikiTakaV2:    [core, aux]
///   Residual:                  [W^(0), ..., W^(N)]
class AnalogLayer {
 public:
  AnalogLayer(CompositeWeight weights, TrainerSettings settings, std::uint64_t seed,
              std::uint64_t layer_index);

  const CompositeWeight& weights() const { return weights_; }
  CompositeWeight& weights() { return weights_; }
  const TrainerState& state() const { return state_; }
  const TrainerSettings& settings() const { return settings_; }

  std::vector<double> forward(std::span<const double> x) const { return weights_.forward(x); }
  std::vector<double> backward(std::span<const double> d) const { return weights_.backward(d); }

  /// One training step given the gradient factors (gradient = x * delta^T).
  StepStats update(std::span<const double> x, std::span<const double> delta);

  /// Appends a loss to the history and advances the warm-start target when
  /// a plateau is detected.
  void record_loss(double loss);

  Rng& tile_rng(std::size_t n) { return rngs_.at(n); }

 private:
  CompositeWeight weights_;
  TrainerSettings settings_;
  TrainerState state_;
  std::vector<Rng> rngs_;
};

/// Builds the composite for an algorithm from a device and an initial weight
/// for the coarsest tile (every other tile starts at zero).
AnalogLayer make_layer(const TrainerSettings& settings, const DeviceModel& device,
                       const Matrix& init, std::uint64_t seed, std::uint64_t layer_index);

/// Multi-timescale residual step on a composite with N+1 tiles:
///  1. pulse-update the gradient tile N with -alpha * x * delta^T;
///  2. warm start (warm_k < N): every T_N steps transfer the next cursor
///     column of tile N into tile warm_k;
///  3. cascade (warm_k == N): for n = N-1 down to 0, when edge n fires,
///     transfer the next cursor column of tile n+1 into tile n with beta[n].
/// Advances the composite's global step. `rngs` holds one stream per tile.
StepStats residual_step(CompositeWeight& cw, std::span<const double> x,
                        std::span<const double> delta, TrainerState& state, std::span<Rng> rngs);

/// Free-standing Tiki-Taka steps over an explicit (core, aux) pair; the layer
/// class uses the same logic.
StepStats ttv1_step(Tile& core, Tile& aux, std::span<const double> x, std::span<const double> delta,
                    std::int64_t t, const TrainerSettings& settings, Rng& aux_rng, Rng& core_rng);
StepStats ttv2_step(Tile& core, Tile& aux, Matrix& buffer, std::span<const double> x,
                    std::span<const double> delta, std::int64_t t, const TrainerSettings& settings,
                    Rng& aux_rng, Rng& core_rng);

}  // namespace aimc
