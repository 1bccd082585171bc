#include "aimc/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aimc/errors.hpp"

namespace aimc {

std::string to_string(LossKind kind) {
  return kind == LossKind::MeanSquared ? "mse" : "cross_entropy";
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "cross_entropy" || name == "ce") return LossKind::SoftmaxCrossEntropy;
  if (name == "mse") return LossKind::MeanSquared;
  throw ConfigError("unknown loss '" + name + "'");
}

void MlpSpec::validate() const {
  if (sizes.size() < 2) throw ConfigError("mlp needs at least an input and an output size");
  for (std::size_t s : sizes)
    if (s == 0) throw ConfigError("mlp layer sizes must be positive");
  if (analog.size() != num_layers()) throw ConfigError("analog mask needs one entry per layer");
}

std::size_t LinearView::rows() const { return analog ? analog->rows() : digital->rows(); }
std::size_t LinearView::cols() const { return analog ? analog->cols() : digital->cols(); }

std::vector<double> LinearView::forward(std::span<const double> x) const {
  if (analog) return analog->forward(x);
  if (x.size() != digital->rows()) throw IndexError("digital layer: input size mismatch");
  std::vector<double> y(digital->cols(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) continue;
    auto r = digital->row(i);
    for (std::size_t j = 0; j < y.size(); ++j) y[j] += x[i] * r[j];
  }
  return y;
}

std::vector<double> LinearView::backward(std::span<const double> d) const {
  if (analog) return analog->backward(d);
  if (d.size() != digital->cols()) throw IndexError("digital layer: error size mismatch");
  std::vector<double> z(digital->rows(), 0.0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    auto r = digital->row(i);
    for (std::size_t j = 0; j < d.size(); ++j) z[i] += r[j] * d[j];
  }
  return z;
}

namespace {

void check_shapes(const MlpSpec& spec, std::span<const LinearView> weights,
                  std::span<const std::vector<double>> biases, std::size_t input) {
  spec.validate();
  const std::size_t n = spec.num_layers();
  if (weights.size() != n || biases.size() != n) throw IndexError("mlp: wrong number of layers");
  if (input != spec.sizes.front()) throw IndexError("mlp: input size mismatch");
  for (std::size_t l = 0; l < n; ++l) {
    if (weights[l].rows() != spec.sizes[l] || weights[l].cols() != spec.sizes[l + 1])
      throw IndexError("mlp: weight shape mismatch at layer " + std::to_string(l));
    if (biases[l].size() != spec.sizes[l + 1])
      throw IndexError("mlp: bias size mismatch at layer " + std::to_string(l));
  }
}

std::vector<double> softmax(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double s = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) s += p[k] = std::exp(z[k] - m);
  for (double& v : p) v /= s;
  return p;
}

}  // namespace

double mlp_loss(const MlpSpec& spec, std::span<const double> output, std::span<const double> target) {
  if (output.size() != target.size()) throw IndexError("mlp: target size mismatch");
  double loss = 0.0;
  if (spec.loss == LossKind::MeanSquared) {
    for (std::size_t k = 0; k < output.size(); ++k) loss += 0.5 * (output[k] - target[k]) * (output[k] - target[k]);
    return loss;
  }
  const double m = *std::max_element(output.begin(), output.end());
  double s = 0.0;
  for (double z : output) s += std::exp(z - m);
  const double log_z = m + std::log(s);
  for (std::size_t k = 0; k < output.size(); ++k)
    if (target[k] != 0.0) loss -= target[k] * (output[k] - log_z);
  return loss;
}

std::vector<double> mlp_forward(const MlpSpec& spec, std::span<const LinearView> weights,
                                std::span<const std::vector<double>> biases,
                                std::span<const double> input) {
  check_shapes(spec, weights, biases, input.size());
  std::vector<double> h(input.begin(), input.end());
  const std::size_t n = spec.num_layers();
  for (std::size_t l = 0; l < n; ++l) {
    std::vector<double> z = weights[l].forward(h);
    for (std::size_t j = 0; j < z.size(); ++j) z[j] += biases[l][j];
    if (l + 1 < n)
      for (double& v : z) v = std::tanh(v);
    h = std::move(z);
  }
  return h;
}

ForwardBackward mlp_forward_backward(const MlpSpec& spec, std::span<const LinearView> weights,
                                     std::span<const std::vector<double>> biases,
                                     std::span<const double> input, std::span<const double> target) {
  check_shapes(spec, weights, biases, input.size());
  if (target.size() != spec.sizes.back()) throw IndexError("mlp: target size mismatch");
  const std::size_t n = spec.num_layers();
  ForwardBackward fb;
  fb.layers.resize(n);

  std::vector<double> h(input.begin(), input.end());
  for (std::size_t l = 0; l < n; ++l) {
    fb.layers[l].x = h;
    std::vector<double> z = weights[l].forward(h);
    for (std::size_t j = 0; j < z.size(); ++j) z[j] += biases[l][j];
    if (l + 1 < n)
      for (double& v : z) v = std::tanh(v);
    h = std::move(z);
  }
  fb.output = h;
  fb.loss = mlp_loss(spec, fb.output, target);

  std::vector<double> delta(fb.output.size());
  if (spec.loss == LossKind::MeanSquared) {
    for (std::size_t k = 0; k < delta.size(); ++k) delta[k] = fb.output[k] - target[k];
  } else {
    const std::vector<double> p = softmax(fb.output);
    const double mass = std::accumulate(target.begin(), target.end(), 0.0);
    for (std::size_t k = 0; k < delta.size(); ++k) delta[k] = mass * p[k] - target[k];
  }
  for (std::size_t l = n; l-- > 0;) {
    if (l + 1 < n) {
      // fb.layers[l + 1].x holds tanh(z_l).
      std::vector<double> back = weights[l + 1].backward(fb.layers[l + 1].delta);
      const auto& a = fb.layers[l + 1].x;
      for (std::size_t j = 0; j < back.size(); ++j) back[j] *= 1.0 - a[j] * a[j];
      delta = std::move(back);
    }
    fb.layers[l].delta = delta;
  }
  return fb;
}

MlpTrainer::MlpTrainer(MlpTrainConfig config) : config_(std::move(config)) {
  const MlpSpec& spec = config_.spec;
  spec.validate();
  const std::size_t n = spec.num_layers();
  if (!config_.layer_kappa.empty() && config_.layer_kappa.size() != n)
    throw ConfigError("layer_kappa needs one entry per layer");
  analog_.resize(n);
  digital_.resize(n);
  biases_.resize(n);
  Rng init_rng = make_stream(config_.seed, StreamPurpose::Init);
  const DeviceModel& d = config_.device;
  for (std::size_t l = 0; l < n; ++l) {
    const std::size_t rows = spec.sizes[l];
    const std::size_t cols = spec.sizes[l + 1];
    const double kappa = config_.layer_kappa.empty() ? d.kappa() : config_.layer_kappa[l];
    DeviceModel dev = d;
    switch (d.kind()) {
      case DeviceKind::Ideal:
        dev = DeviceModel::ideal(d.tau_min(), d.tau_max(), d.dw_min(), kappa);
        break;
      case DeviceKind::AsymmetricLinear:
        dev = DeviceModel::asymmetric_linear(d.tau_min(), d.tau_max(), d.dw_min(), kappa);
        break;
      case DeviceKind::Custom:
        if (kappa != d.kappa()) throw ConfigError("per-layer kappa is not supported for custom devices");
        break;
    }
    const double bound = config_.init_scale / std::sqrt(static_cast<double>(rows));
    Matrix init(rows, cols);
    for (double& w : init.data()) {
      w = bound * (2.0 * uniform01(init_rng) - 1.0);
      if (spec.analog[l]) w = std::clamp(w, dev.weight_min(), dev.weight_max());
    }
    biases_[l].assign(cols, 0.0);
    if (spec.analog[l])
      analog_[l].emplace(make_layer(config_.settings, dev, init, config_.seed, l));
    else
      digital_[l] = std::move(init);
  }
}

std::vector<LinearView> MlpTrainer::views() const {
  std::vector<LinearView> v(analog_.size());
  for (std::size_t l = 0; l < v.size(); ++l) {
    if (analog_[l])
      v[l].analog = &analog_[l]->weights();
    else
      v[l].digital = &digital_[l];
  }
  return v;
}

double MlpTrainer::train_sample(std::span<const double> input, std::span<const double> target) {
  const std::vector<LinearView> v = views();
  const ForwardBackward fb = mlp_forward_backward(config_.spec, v, biases_, input, target);
  const double lr = config_.digital_lr;
  for (std::size_t l = 0; l < analog_.size(); ++l) {
    const LayerGrad& g = fb.layers[l];
    for (std::size_t j = 0; j < biases_[l].size(); ++j) biases_[l][j] -= lr * g.delta[j];
    if (analog_[l]) {
      pulses_ += analog_[l]->update(g.x, g.delta).pulses;
    } else {
      Matrix& w = digital_[l];
      for (std::size_t i = 0; i < w.rows(); ++i) {
        if (g.x[i] == 0.0) continue;
        auto r = w.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) r[j] -= lr * g.x[i] * g.delta[j];
      }
    }
  }
  return fb.loss;
}

void MlpTrainer::record_loss(double loss) {
  for (auto& a : analog_)
    if (a) a->record_loss(loss);
}

EpochReport MlpTrainer::train_epoch(const Dataset& train, std::size_t epoch) {
  const std::size_t classes = config_.spec.sizes.back();
  std::vector<std::size_t> order(train.count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng = make_stream(config_.seed, StreamPurpose::Data, epoch);
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  const std::size_t interval = config_.log_interval == 0 ? train.count : config_.log_interval;
  std::vector<double> target(classes, 0.0);
  double epoch_loss = 0.0;
  double window_loss = 0.0;
  std::size_t window = 0;
  const std::size_t pulses_before = pulses_;
  for (std::size_t k : order) {
    const std::uint8_t label = train.labels[k];
    if (label >= classes) throw IndexError("label exceeds number of classes");
    std::fill(target.begin(), target.end(), 0.0);
    target[label] = 1.0;
    const double loss = train_sample(train.image(k), target);
    epoch_loss += loss;
    window_loss += loss;
    if (++window == interval) {
      record_loss(window_loss / static_cast<double>(window));
      window_loss = 0.0;
      window = 0;
    }
  }
  EpochReport rep;
  rep.epoch = epoch;
  rep.train_loss = train.count ? epoch_loss / static_cast<double>(train.count) : 0.0;
  rep.pulses = pulses_ - pulses_before;
  return rep;
}

double MlpTrainer::accuracy(const Dataset& data) const {
  if (data.count == 0) return 0.0;
  const std::vector<LinearView> v = views();
  std::size_t correct = 0;
  for (std::size_t k = 0; k < data.count; ++k) {
    const std::vector<double> out = mlp_forward(config_.spec, v, biases_, data.image(k));
    const auto pred = static_cast<std::size_t>(std::max_element(out.begin(), out.end()) - out.begin());
    if (pred == data.labels[k]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.count);
}

std::vector<EpochReport> MlpTrainer::fit(const Dataset& train, const Dataset& test) {
  std::vector<EpochReport> reports;
  for (std::size_t e = 0; e < config_.epochs; ++e) {
    EpochReport rep = train_epoch(train, e);
    rep.test_accuracy = accuracy(test);
    reports.push_back(rep);
  }
  return reports;
}

}  // namespace aimc
