#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aimc/algorithms.hpp"
#include "aimc/composite.hpp"
#include "aimc/device.hpp"
#include "aimc/idx.hpp"
#include "aimc/matrix.hpp"

namespace aimc {

enum class LossKind { SoftmaxCrossEntropy, MeanSquared };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

/// Fully connected network: tanh on hidden layers, linear output followed by
/// the loss. `analog[l]` selects whether layer l lives on tiles.
struct MlpSpec {
  std::vector<std::size_t> sizes;
  LossKind loss = LossKind::SoftmaxCrossEntropy;
  std::vector<bool> analog;

  std::size_t num_layers() const { return sizes.empty() ? 0 : sizes.size() - 1; }
  void validate() const;
};

/// Read-only view of one layer's weight: either a composite or a plain
/// digital matrix (rows = inputs, cols = outputs).
struct LinearView {
  const CompositeWeight* analog = nullptr;
  const Matrix* digital = nullptr;

  std::size_t rows() const;
  std::size_t cols() const;
  std::vector<double> forward(std::span<const double> x) const;
  std::vector<double> backward(std::span<const double> d) const;
};

/// Input and error of one layer; the weight gradient is x * delta^T.
struct LayerGrad {
  std::vector<double> x;
  std::vector<double> delta;
};

struct ForwardBackward {
  double loss = 0.0;
  std::vector<double> output;
  std::vector<LayerGrad> layers;
};

/// Loss and per-layer gradient factors for one sample. `target` is a one-hot
/// vector for cross-entropy or the regression target for MSE
/// (loss = 0.5 * |y - target|^2).
ForwardBackward mlp_forward_backward(const MlpSpec& spec, std::span<const LinearView> weights,
                                     std::span<const std::vector<double>> biases,
                                     std::span<const double> input, std::span<const double> target);

/// Forward pass only; returns the network output before the loss.
std::vector<double> mlp_forward(const MlpSpec& spec, std::span<const LinearView> weights,
                                std::span<const std::vector<double>> biases,
                                std::span<const double> input);

double mlp_loss(const MlpSpec& spec, std::span<const double> output, std::span<const double> target);

struct MlpTrainConfig {
  MlpSpec spec;
  TrainerSettings settings;
  /// Device in conductance units; each layer gets its own kappa.
  DeviceModel device = DeviceModel::asymmetric_linear(-1.0, 1.0, 0.2);
  /// Per-layer kappa; empty means the device's own.
  std::vector<double> layer_kappa;
  /// Initial weights uniform in +-init_scale / sqrt(fan_in), clipped to the
  /// device bounds.
  double init_scale = 1.0;
  /// Learning rate of the digital biases and of digital layers.
  double digital_lr = 0.1;
  std::size_t epochs = 3;
  /// Samples between loss-history entries (drives the warm-start plateau
  /// detector); 0 means once per epoch.
  std::size_t log_interval = 0;
  std::uint64_t seed = 1;
};

struct EpochReport {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double test_accuracy = 0.0;
  std::size_t pulses = 0;
};

/// Per-sample (rank-1) trainer of an MLP whose analog layers each own an
/// AnalogLayer. Biases are digital.
class MlpTrainer {
 public:
  explicit MlpTrainer(MlpTrainConfig config);

  const MlpTrainConfig& config() const { return config_; }
  std::vector<LinearView> views() const;
  const std::vector<std::vector<double>>& biases() const { return biases_; }
  const AnalogLayer& layer(std::size_t l) const { return *analog_.at(l); }

  /// One sample: forward, backward, update every layer. Returns the loss.
  double train_sample(std::span<const double> input, std::span<const double> target);
  /// One pass over the data in a seeded shuffled order.
  EpochReport train_epoch(const Dataset& train, std::size_t epoch);
  double accuracy(const Dataset& data) const;
  std::vector<EpochReport> fit(const Dataset& train, const Dataset& test);

 private:
  void record_loss(double loss);

  MlpTrainConfig config_;
  std::vector<std::optional<AnalogLayer>> analog_;
  std::vector<Matrix> digital_;
  std::vector<std::vector<double>> biases_;
  std::size_t pulses_ = 0;
};

}  // namespace aimc
