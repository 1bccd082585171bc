#include "aimc/tile.hpp"

#include <sstream>

#include "aimc/errors.hpp"
#include "aimc/rng.hpp"

namespace aimc {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw IndexError("matrix data size does not match shape");
}

void Matrix::add_scaled(const Matrix& other, double scale) {
  if (other.rows_ != rows_ || other.cols_ != cols_) throw IndexError("matrix shape mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += scale * other.data_[k];
}

double Matrix::max_abs() const { return aimc::max_abs(data_); }

Tile::Tile(std::size_t rows, std::size_t cols, DeviceModel model)
    : model_(std::move(model)), weights_(rows, cols, 0.0) {
  if (rows == 0 || cols == 0) throw IndexError("tile shape must be nonzero");
}

Tile::Tile(std::size_t rows, std::size_t cols, DeviceModel model, const UniformInit& init,
           Rng& rng)
    : Tile(rows, cols, std::move(model)) {
  if (!(init.lo <= init.hi)) throw ConfigError("uniform init needs lo <= hi");
  if (init.lo < model_.weight_min() || init.hi > model_.weight_max())
    throw DomainError("uniform init range exceeds device bounds");
  for (double& w : weights_.data()) w = init.lo + (init.hi - init.lo) * uniform01(rng);
}

Tile::Tile(DeviceModel model, const GivenInit& init)
    : model_(std::move(model)), weights_(init.weights) {
  if (weights_.rows() == 0 || weights_.cols() == 0) throw IndexError("tile shape must be nonzero");
  check_bounds();
}

void Tile::check_bounds() const {
  for (double w : weights_.data()) {
    if (!(w >= model_.weight_min() && w <= model_.weight_max())) {
      std::ostringstream os;
      os << "initial weight " << w << " outside device bounds";
      throw DomainError(os.str());
    }
  }
}

std::vector<double> Tile::read_forward(std::span<const double> x) const {
  std::vector<double> y(cols(), 0.0);
  accumulate_forward(x, 1.0, y);
  return y;
}

std::vector<double> Tile::read_backward(std::span<const double> d) const {
  std::vector<double> z(rows(), 0.0);
  accumulate_backward(d, 1.0, z);
  return z;
}

void Tile::accumulate_forward(std::span<const double> x, double scale,
                              std::span<double> out) const {
  if (x.size() != rows() || out.size() != cols())
    throw IndexError("read_forward: dimension mismatch");
  for (std::size_t i = 0; i < rows(); ++i) {
    const double xi = scale * x[i];
    if (xi == 0.0) continue;
    const auto r = weights_.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += xi * r[j];
  }
}

void Tile::accumulate_backward(std::span<const double> d, double scale,
                               std::span<double> out) const {
  if (d.size() != cols() || out.size() != rows())
    throw IndexError("read_backward: dimension mismatch");
  for (std::size_t i = 0; i < rows(); ++i) {
    const auto r = weights_.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) acc += r[j] * d[j];
    out[i] += scale * acc;
  }
}

std::vector<double> Tile::read_column(std::size_t j) const {
  if (j >= cols()) throw IndexError("read_column: column out of range");
  std::vector<double> c(rows());
  for (std::size_t i = 0; i < rows(); ++i) c[i] = weights_(i, j);
  return c;
}

std::size_t Tile::advance_cursor() {
  const std::size_t current = cursor_;
  cursor_ = (cursor_ + 1) % cols();
  return current;
}

void Tile::set_cursor(std::size_t c) {
  if (c >= cols()) throw IndexError("cursor out of range");
  cursor_ = c;
}

}  // namespace aimc
