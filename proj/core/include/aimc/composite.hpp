#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "aimc/matrix.hpp"
#include "aimc/tile.hpp"

namespace aimc {

/// Local step counter of tile n at global step t (0-based):
/// t_N = t, t_n = floor((t + 1) / prod_{k=n+1..N} T_k) for n < N.
/// `transfer_every` holds T_1..T_N, so its size is N.
std::int64_t local_counter(std::int64_t t, std::size_t n, std::span<const std::int64_t> transfer_every);

/// Number of global steps between two writes into tile n: prod_{k=n+1..N} T_k.
std::int64_t transfer_period(std::size_t n, std::span<const std::int64_t> transfer_every);

/// True on the global step where tile n+1 completes an inner loop, i.e. when
/// tile n receives a transfer: (t + 1) is a multiple of transfer_period(n).
bool is_transfer_step(std::int64_t t, std::size_t edge_n, std::span<const std::int64_t> transfer_every);

/// Converts reference-style global transfer periods (index 0 = gradient tile,
/// one entry per tile, e.g. [2 * 2^i]) into per-edge inner-loop lengths
/// T_1..T_N in tile order. Periods must divide each other.
std::vector<std::int64_t> inner_loops_from_periods(std::span<const std::int64_t> periods);

/// Reference-order scale vector (index 0 = gradient tile) to tile order.
std::vector<double> scales_from_reference(std::span<const double> gamma_vec);

/// Composite weight sum_n scale[n] * W^(n). Tile 0 is the coarsest; tile N
/// receives the gradient. Default scales are gamma^n.
class CompositeWeight {
 public:
  CompositeWeight(std::vector<Tile> tiles, double gamma, std::vector<std::int64_t> transfer_every);
  CompositeWeight(std::vector<Tile> tiles, std::vector<double> scales,
                  std::vector<std::int64_t> transfer_every);

  std::size_t num_tiles() const { return tiles_.size(); }
  /// Index of the gradient tile (N).
  std::size_t top() const { return tiles_.size() - 1; }
  std::size_t rows() const { return tiles_.front().rows(); }
  std::size_t cols() const { return tiles_.front().cols(); }

  Tile& tile(std::size_t n) { return tiles_.at(n); }
  const Tile& tile(std::size_t n) const { return tiles_.at(n); }
  const std::vector<Tile>& tiles() const { return tiles_; }
  std::span<const double> scales() const { return scales_; }
  std::span<const std::int64_t> transfer_every() const { return transfer_every_; }

  std::int64_t step() const { return t_; }
  void set_step(std::int64_t t) { t_ = t; }
  void advance() { ++t_; }

  std::vector<double> forward(std::span<const double> x) const;
  std::vector<double> backward(std::span<const double> d) const;

  /// sum_{n' < n} scale[n'] * W^(n'); n ranges over 0..N+1.
  Matrix partial_sum(std::size_t n) const;
  Matrix effective_weight() const { return partial_sum(tiles_.size()); }

 private:
  void validate() const;

  std::vector<Tile> tiles_;
  std::vector<double> scales_;
  std::vector<std::int64_t> transfer_every_;
  std::int64_t t_ = 0;
};

}  // namespace aimc
