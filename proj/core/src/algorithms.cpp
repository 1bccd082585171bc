#include "aimc/algorithms.hpp"

#include <cmath>

#include "aimc/errors.hpp"
#include "aimc/pulse.hpp"

namespace aimc {

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::AnalogSgd:
      return "analog_sgd";
    case Algorithm::TikiTakaV1:
      return "ttv1";
    case Algorithm::TikiTakaV2:
      return "ttv2";
    case Algorithm::MixedPrecision:
      return "mp";
    case Algorithm::Residual:
      return "residual";
  }
  return "unknown";
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "analog_sgd" || name == "sgd") return Algorithm::AnalogSgd;
  if (name == "ttv1" || name == "tiki_taka_v1") return Algorithm::TikiTakaV1;
  if (name == "ttv2" || name == "tiki_taka_v2") return Algorithm::TikiTakaV2;
  if (name == "mp" || name == "mixed_precision") return Algorithm::MixedPrecision;
  if (name == "residual" || name == "ours") return Algorithm::Residual;
  throw ConfigError("unknown algorithm '" + name + "'");
}

std::vector<double> default_transfer_lr(std::size_t n_edges) {
  std::vector<double> lr(n_edges);
  for (std::size_t n = 0; n < n_edges; ++n) lr[n] = 0.1 * std::pow(1.2, static_cast<double>(n));
  return lr;
}

std::size_t analog_sgd_step(Tile& tile, std::span<const double> x, std::span<const double> delta,
                            double alpha, Rng& rng) {
  PulsePlan plan = plan_update(x, delta, alpha, tile.model());
  for (auto& s : plan.sign_col) s = static_cast<signed char>(-s);
  return apply_rank_update(tile, plan, rng);
}

bool loss_plateau(std::span<const double> history, std::size_t k) {
  const std::size_t n = history.size();
  if (k <= 3) {
    if (n < 2) return false;
    return history[n - 1] > history[n - 2];
  }
  if (n < 6) return false;
  int rises = 0;
  for (std::size_t i = n - 6; i < n - 1; ++i)
    if (history[i + 1] > history[i]) ++rises;
  return rises >= 2;
}

bool loss_plateau(const std::deque<double>& history, std::size_t k) {
  // Only the last six entries matter.
  const std::size_t take = std::min<std::size_t>(history.size(), 6);
  std::vector<double> tail(history.end() - static_cast<std::ptrdiff_t>(take), history.end());
  return loss_plateau(std::span<const double>(tail), k);
}

std::size_t mp_program(Tile& tile, Matrix& accumulator) {
  if (accumulator.rows() != tile.rows() || accumulator.cols() != tile.cols())
    throw IndexError("mp: accumulator shape does not match tile");
  const double inc = tile.model().increment();
  std::size_t pulses = 0;
  for (std::size_t i = 0; i < tile.rows(); ++i) {
    for (std::size_t j = 0; j < tile.cols(); ++j) {
      double& a = accumulator(i, j);
      if (std::abs(a) < inc) continue;
      const auto count = static_cast<std::size_t>(std::floor(std::abs(a) / inc));
      const int sign = a > 0.0 ? 1 : -1;
      for (std::size_t p = 0; p < count; ++p) tile.pulse(i, j, sign);
      a -= sign * static_cast<double>(count) * inc;
      pulses += count;
    }
  }
  return pulses;
}

MpResult mp_step(Tile& tile, Matrix& accumulator, std::span<const double> x,
                 std::span<const double> delta, double alpha) {
  if (x.size() != tile.rows() || delta.size() != tile.cols())
    throw IndexError("mp_step: dimension mismatch");
  if (accumulator.rows() != tile.rows() || accumulator.cols() != tile.cols())
    throw IndexError("mp: accumulator shape does not match tile");
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double ax = alpha * x[i];
    if (ax == 0.0) continue;
    auto r = accumulator.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] -= ax * delta[j];
  }
  return {mp_program(tile, accumulator)};
}

namespace {

std::size_t transfer_column(Tile& src, Tile& dst, double beta, Rng& dst_rng) {
  const std::size_t col = src.advance_cursor();
  const std::vector<double> values = src.read_column(col);
  return transfer_write(dst, values, col, beta, dst_rng);
}

}  // namespace

StepStats residual_step(CompositeWeight& cw, std::span<const double> x,
                        std::span<const double> delta, TrainerState& state, std::span<Rng> rngs) {
  const std::size_t top = cw.top();
  if (rngs.size() != cw.num_tiles()) throw ConfigError("residual_step: one stream per tile");
  if (state.beta.size() != top) throw ConfigError("residual_step: one transfer rate per edge");
  if (state.transfers_into.size() != cw.num_tiles()) state.transfers_into.assign(cw.num_tiles(), 0);

  StepStats stats;
  const std::int64_t t = cw.step();
  stats.pulses += analog_sgd_step(cw.tile(top), x, delta, state.alpha, rngs[top]);

  const auto loops = cw.transfer_every();
  if (state.warm_k < top) {
    if ((t + 1) % loops[top - 1] == 0) {
      const std::size_t k = state.warm_k;
      stats.pulses += transfer_column(cw.tile(top), cw.tile(k), state.beta[k], rngs[k]);
      ++stats.transfers;
      ++state.transfers_into[k];
    }
  } else {
    for (std::size_t e = top; e-- > 0;) {
      if (!is_transfer_step(t, e, loops)) continue;
      stats.pulses += transfer_column(cw.tile(e + 1), cw.tile(e), state.beta[e], rngs[e]);
      ++stats.transfers;
      ++state.transfers_into[e];
    }
  }
  cw.advance();
  return stats;
}

StepStats ttv1_step(Tile& core, Tile& aux, std::span<const double> x, std::span<const double> delta,
                    std::int64_t t, const TrainerSettings& settings, Rng& aux_rng, Rng& core_rng) {
  StepStats stats;
  stats.pulses += analog_sgd_step(aux, x, delta, settings.alpha, aux_rng);
  if ((t + 1) % settings.tt_every == 0) {
    stats.pulses += transfer_column(aux, core, settings.transfer_lr.at(0), core_rng);
    ++stats.transfers;
  }
  return stats;
}

StepStats ttv2_step(Tile& core, Tile& aux, Matrix& buffer, std::span<const double> x,
                    std::span<const double> delta, std::int64_t t, const TrainerSettings& settings,
                    Rng& aux_rng, Rng& core_rng) {
  if (buffer.rows() != core.rows() || buffer.cols() != core.cols())
    throw IndexError("ttv2: buffer shape does not match tile");
  StepStats stats;
  stats.pulses += analog_sgd_step(aux, x, delta, settings.alpha, aux_rng);
  if ((t + 1) % settings.tt_every == 0) {
    const std::size_t col = aux.advance_cursor();
    const std::vector<double> read = aux.read_column(col);
    std::vector<double> filtered(core.rows());
    for (std::size_t i = 0; i < core.rows(); ++i) {
      buffer(i, col) += read[i];
      filtered[i] = buffer(i, col);
    }
    stats.pulses += transfer_write(core, filtered, col, settings.transfer_lr.at(0), core_rng);
    for (std::size_t i = 0; i < core.rows(); ++i) buffer(i, col) *= 1.0 - settings.ttv2_decay;
    ++stats.transfers;
  }
  return stats;
}

AnalogLayer::AnalogLayer(CompositeWeight weights, TrainerSettings settings, std::uint64_t seed,
                         std::uint64_t layer_index)
    : weights_(std::move(weights)), settings_(std::move(settings)) {
  if (!(settings_.alpha > 0.0)) throw ConfigError("alpha must be positive");
  const std::size_t n_tiles = weights_.num_tiles();
  state_.algo = settings_.algorithm;
  state_.alpha = settings_.alpha;
  state_.history_capacity = std::max<std::size_t>(settings_.history_capacity, 6);
  state_.transfers_into.assign(n_tiles, 0);

  switch (settings_.algorithm) {
    case Algorithm::AnalogSgd:
      if (n_tiles != 1) throw ConfigError("analog SGD uses exactly one tile");
      state_.warm_k = 0;
      break;
    case Algorithm::MixedPrecision:
      if (n_tiles != 1) throw ConfigError("mixed precision uses exactly one tile");
      state_.digital_buffer = Matrix(weights_.rows(), weights_.cols(), 0.0);
      state_.transfer_threshold = weights_.tile(0).model().increment();
      break;
    case Algorithm::TikiTakaV1:
    case Algorithm::TikiTakaV2:
      if (n_tiles != 2) throw ConfigError("Tiki-Taka uses a core and an aux tile");
      if (settings_.transfer_lr.size() != 1) throw ConfigError("Tiki-Taka needs one transfer_lr");
      if (settings_.tt_every < 1) throw ConfigError("Tiki-Taka transfer period must be >= 1");
      state_.beta = settings_.transfer_lr;
      if (settings_.algorithm == Algorithm::TikiTakaV2)
        state_.digital_buffer = Matrix(weights_.rows(), weights_.cols(), 0.0);
      break;
    case Algorithm::Residual:
      if (settings_.transfer_lr.size() != n_tiles - 1)
        throw ConfigError("residual needs one transfer rate per receiving tile");
      state_.beta = settings_.transfer_lr;
      state_.warm_k = settings_.warm_start ? 0 : n_tiles - 1;
      break;
  }
  for (double b : state_.beta)
    if (!(b > 0.0)) throw ConfigError("transfer rates must be positive");

  rngs_.reserve(n_tiles);
  for (std::size_t n = 0; n < n_tiles; ++n)
    rngs_.push_back(make_stream(seed, StreamPurpose::Tile, layer_index, n));
}

StepStats AnalogLayer::update(std::span<const double> x, std::span<const double> delta) {
  StepStats stats;
  switch (settings_.algorithm) {
    case Algorithm::AnalogSgd:
      stats.pulses = analog_sgd_step(weights_.tile(0), x, delta, state_.alpha, rngs_[0]);
      weights_.advance();
      break;
    case Algorithm::MixedPrecision:
      stats.pulses = mp_step(weights_.tile(0), *state_.digital_buffer, x, delta, state_.alpha).pulses;
      weights_.advance();
      break;
    case Algorithm::TikiTakaV1:
      stats = ttv1_step(weights_.tile(0), weights_.tile(1), x, delta, weights_.step(), settings_,
                        rngs_[1], rngs_[0]);
      state_.transfers_into[0] += static_cast<std::int64_t>(stats.transfers);
      weights_.advance();
      break;
    case Algorithm::TikiTakaV2:
      stats = ttv2_step(weights_.tile(0), weights_.tile(1), *state_.digital_buffer, x, delta,
                        weights_.step(), settings_, rngs_[1], rngs_[0]);
      state_.transfers_into[0] += static_cast<std::int64_t>(stats.transfers);
      weights_.advance();
      break;
    case Algorithm::Residual:
      stats = residual_step(weights_, x, delta, state_, rngs_);
      break;
  }
  return stats;
}

void AnalogLayer::record_loss(double loss) {
  state_.loss_history.push_back(loss);
  while (state_.loss_history.size() > state_.history_capacity) state_.loss_history.pop_front();
  if (settings_.algorithm != Algorithm::Residual) return;
  const std::size_t top = weights_.top();
  if (state_.warm_k < top && loss_plateau(state_.loss_history, state_.warm_k)) {
    ++state_.warm_k;
    state_.warm_switch_steps.push_back(weights_.step());
  }
}

AnalogLayer make_layer(const TrainerSettings& settings, const DeviceModel& device,
                       const Matrix& init, std::uint64_t seed, std::uint64_t layer_index) {
  const std::size_t rows = init.rows();
  const std::size_t cols = init.cols();
  std::vector<Tile> tiles;
  std::vector<double> scales;
  std::vector<std::int64_t> loops;
  tiles.emplace_back(device, GivenInit{init});
  switch (settings.algorithm) {
    case Algorithm::AnalogSgd:
    case Algorithm::MixedPrecision:
      scales = {1.0};
      break;
    case Algorithm::TikiTakaV1:
    case Algorithm::TikiTakaV2:
      tiles.emplace_back(rows, cols, device);
      scales = {1.0, settings.tt_gamma};
      loops = {settings.tt_every};
      break;
    case Algorithm::Residual: {
      if (settings.num_tiles < 1) throw ConfigError("residual needs at least one tile");
      for (std::size_t n = 1; n < settings.num_tiles; ++n) tiles.emplace_back(rows, cols, device);
      scales = settings.scales;
      loops = settings.transfer_every;
      break;
    }
  }
  CompositeWeight cw(std::move(tiles), std::move(scales), std::move(loops));
  return AnalogLayer(std::move(cw), settings, seed, layer_index);
}

}  // namespace aimc
