#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "aimc/device.hpp"
#include "aimc/matrix.hpp"
#include "aimc/rng.hpp"

namespace aimc {

struct ZeroInit {};
struct UniformInit {
  double lo;
  double hi;
};
struct GivenInit {
  Matrix weights;
};

/// One crossbar array. Weights (logical units) change only through pulse
/// events; reads are exact.
class Tile {
 public:
  Tile(std::size_t rows, std::size_t cols, DeviceModel model);
  Tile(std::size_t rows, std::size_t cols, DeviceModel model, const UniformInit& init, Rng& rng);
  Tile(DeviceModel model, const GivenInit& init);

  std::size_t rows() const { return weights_.rows(); }
  std::size_t cols() const { return weights_.cols(); }
  const DeviceModel& model() const { return model_; }
  const Matrix& weights() const { return weights_; }
  double at(std::size_t i, std::size_t j) const { return weights_(i, j); }

  /// y = x^T W (length cols)
  std::vector<double> read_forward(std::span<const double> x) const;
  /// z = W d (length rows)
  std::vector<double> read_backward(std::span<const double> d) const;

  /// out += scale * x^T W, no allocation.
  void accumulate_forward(std::span<const double> x, double scale, std::span<double> out) const;
  /// out += scale * W d
  void accumulate_backward(std::span<const double> d, double scale, std::span<double> out) const;

  std::vector<double> read_column(std::size_t j) const;
  std::size_t cursor() const { return cursor_; }
  /// Returns the current transfer column and moves the cursor cyclically.
  std::size_t advance_cursor();
  void set_cursor(std::size_t c);

  /// Apply one pulse of the given polarity at (i, j).
  void pulse(std::size_t i, std::size_t j, int sign) {
    double& w = weights_(i, j);
    w = model_.pulse(w, sign);
  }

  double max_abs() const { return weights_.max_abs(); }

 private:
  void check_bounds() const;

  DeviceModel model_;
  Matrix weights_;
  std::size_t cursor_ = 0;
};

}  // namespace aimc
