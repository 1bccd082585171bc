#include "aimc/composite.hpp"

#include <cmath>

#include "aimc/errors.hpp"

namespace aimc {

std::int64_t transfer_period(std::size_t n, std::span<const std::int64_t> transfer_every) {
  const std::size_t top = transfer_every.size();
  if (n > top) throw IndexError("transfer_period: tile index out of range");
  std::int64_t period = 1;
  for (std::size_t k = n + 1; k <= top; ++k) period *= transfer_every[k - 1];
  return period;
}

std::int64_t local_counter(std::int64_t t, std::size_t n,
                           std::span<const std::int64_t> transfer_every) {
  if (t < 0) throw DomainError("local_counter: t must be >= 0");
  if (n == transfer_every.size()) return t;
  return (t + 1) / transfer_period(n, transfer_every);
}

bool is_transfer_step(std::int64_t t, std::size_t edge_n,
                      std::span<const std::int64_t> transfer_every) {
  if (edge_n >= transfer_every.size()) throw IndexError("is_transfer_step: no such edge");
  return t >= 0 && (t + 1) % transfer_period(edge_n, transfer_every) == 0;
}

std::vector<std::int64_t> inner_loops_from_periods(std::span<const std::int64_t> periods) {
  if (periods.empty()) throw ConfigError("transfer_every_vec must not be empty");
  const std::size_t top = periods.size() - 1;  // N; the last entry (coarsest tile) is unused
  std::vector<std::int64_t> loops(top);
  std::int64_t previous = 1;
  for (std::size_t i = 0; i < top; ++i) {
    if (periods[i] < 1) throw ConfigError("transfer periods must be >= 1");
    if (periods[i] % previous != 0)
      throw ConfigError("each transfer period must be a multiple of the previous one");
    // Reference index i is tile N - i, whose inner loop is T_{N-i}.
    loops[top - i - 1] = periods[i] / previous;
    previous = periods[i];
  }
  return loops;
}

std::vector<double> scales_from_reference(std::span<const double> gamma_vec) {
  return {gamma_vec.rbegin(), gamma_vec.rend()};
}

namespace {

std::vector<double> geometric(double gamma, std::size_t n) {
  std::vector<double> s(n);
  double v = 1.0;
  for (auto& e : s) {
    e = v;
    v *= gamma;
  }
  return s;
}

}  // namespace

CompositeWeight::CompositeWeight(std::vector<Tile> tiles, double gamma,
                                 std::vector<std::int64_t> transfer_every)
    : tiles_(std::move(tiles)), transfer_every_(std::move(transfer_every)) {
  if (!(gamma > 0.0 && gamma < 1.0) && tiles_.size() > 1)
    throw ConfigError("gamma must lie in (0, 1)");
  scales_ = geometric(gamma, tiles_.size());
  validate();
}

CompositeWeight::CompositeWeight(std::vector<Tile> tiles, std::vector<double> scales,
                                 std::vector<std::int64_t> transfer_every)
    : tiles_(std::move(tiles)), scales_(std::move(scales)), transfer_every_(std::move(transfer_every)) {
  validate();
}

void CompositeWeight::validate() const {
  if (tiles_.empty()) throw ConfigError("composite weight needs at least one tile");
  if (scales_.size() != tiles_.size()) throw ConfigError("one scale per tile required");
  if (transfer_every_.size() != tiles_.size() - 1)
    throw ConfigError("transfer_every needs one inner-loop length per transfer edge");
  for (auto T : transfer_every_)
    if (T < 1) throw ConfigError("inner-loop lengths must be >= 1");
  for (double s : scales_)
    if (!std::isfinite(s) || s < 0.0) throw ConfigError("tile scales must be finite and >= 0");
  for (const auto& t : tiles_)
    if (t.rows() != rows() || t.cols() != cols())
      throw ConfigError("all tiles of a composite must share one shape");
}

std::vector<double> CompositeWeight::forward(std::span<const double> x) const {
  std::vector<double> y(cols(), 0.0);
  for (std::size_t n = 0; n < tiles_.size(); ++n) {
    if (scales_[n] == 0.0) {
      if (x.size() != rows()) throw IndexError("composite forward: dimension mismatch");
      continue;
    }
    tiles_[n].accumulate_forward(x, scales_[n], y);
  }
  return y;
}

std::vector<double> CompositeWeight::backward(std::span<const double> d) const {
  std::vector<double> z(rows(), 0.0);
  for (std::size_t n = 0; n < tiles_.size(); ++n) {
    if (scales_[n] == 0.0) {
      if (d.size() != cols()) throw IndexError("composite backward: dimension mismatch");
      continue;
    }
    tiles_[n].accumulate_backward(d, scales_[n], z);
  }
  return z;
}

Matrix CompositeWeight::partial_sum(std::size_t n) const {
  if (n > tiles_.size()) throw IndexError("partial_sum: index out of range");
  Matrix sum(rows(), cols(), 0.0);
  for (std::size_t k = 0; k < n; ++k) sum.add_scaled(tiles_[k].weights(), scales_[k]);
  return sum;
}

}  // namespace aimc
