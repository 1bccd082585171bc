#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "aimc/algorithms.hpp"
#include "aimc/mlp.hpp"
#include "aimc/pulse.hpp"

using namespace aimc;

namespace {

std::vector<double> ramp(std::size_t n, double scale) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = scale * std::sin(0.37 * double(i + 1));
  return v;
}

void BM_PulseUpdate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DeviceModel d = DeviceModel::asymmetric_linear(-1, 1, 0.01);
  Tile tile(n, n, d);
  Rng rng(1);
  const auto x = ramp(n, 1.0), delta = ramp(n, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(analog_sgd_step(tile, x, delta, 0.01, rng));
  state.SetItemsProcessed(state.iterations() * std::int64_t(n * n));
}
BENCHMARK(BM_PulseUpdate)->Arg(64)->Arg(256);

void BM_CompositeForward(benchmark::State& state) {
  const auto tiles = static_cast<std::size_t>(state.range(0));
  const DeviceModel d = DeviceModel::asymmetric_linear(-1, 1, 0.01);
  Rng rng(2);
  std::vector<Tile> ts;
  for (std::size_t k = 0; k < tiles; ++k) ts.emplace_back(256, 256, d, UniformInit{-0.5, 0.5}, rng);
  const CompositeWeight cw(std::move(ts), 0.5, std::vector<std::int64_t>(tiles - 1, 2));
  const auto x = ramp(256, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(cw.forward(x));
}
BENCHMARK(BM_CompositeForward)->Arg(1)->Arg(4);

void BM_ResidualStep(benchmark::State& state) {
  TrainerSettings s;
  s.algorithm = Algorithm::Residual;
  s.alpha = 0.01;
  s.num_tiles = 4;
  s.transfer_lr = {0.1, 0.1, 0.1};
  s.scales = {1.0, 0.5, 0.25, 0.125};
  s.transfer_every = {2, 2, 2};
  s.warm_start = false;
  AnalogLayer layer = make_layer(s, DeviceModel::asymmetric_linear(-1, 1, 0.01), Matrix(128, 128, 0.0), 1, 0);
  const auto x = ramp(128, 1.0), delta = ramp(128, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(layer.update(x, delta));
}
BENCHMARK(BM_ResidualStep);

void BM_MlpSample(benchmark::State& state) {
  MlpTrainConfig cfg;
  cfg.spec = MlpSpec{{784, 64, 10}, LossKind::SoftmaxCrossEntropy, {true, true}};
  cfg.settings.algorithm = Algorithm::AnalogSgd;
  cfg.settings.alpha = 0.05;
  MlpTrainer trainer(cfg);
  std::vector<double> input = ramp(784, 0.5), target(10, 0.0);
  for (double& v : input) v = std::abs(v);
  target[3] = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(trainer.train_sample(input, target));
}
BENCHMARK(BM_MlpSample);

}  // namespace

BENCHMARK_MAIN();
