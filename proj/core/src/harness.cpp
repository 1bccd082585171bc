#include "aimc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "aimc/errors.hpp"
#include "aimc/idx.hpp"
#include "aimc/pulse.hpp"

namespace aimc {

using nlohmann::json;

double median(std::vector<double> values) {
  if (values.empty()) throw DomainError("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

SRDiagnostics diagnostics_sr(std::span<const double> linf_norms, double tau_max, double lipschitz) {
  if (!(tau_max > 0.0)) throw DomainError("diagnostics_sr: tau_max must be positive");
  SRDiagnostics d;
  if (linf_norms.empty()) return d;
  for (double n : linf_norms) {
    const double r = n * n / (tau_max * tau_max);
    if (r >= 1.0) {
      d.saturated = true;
      continue;
    }
    d.s_t += r / (1.0 - r);
    d.r_t += 2.0 * lipschitz / (1.0 - r);
  }
  if (d.saturated) {
    d.s_t = d.r_t = std::numeric_limits<double>::infinity();
    return d;
  }
  d.s_t /= static_cast<double>(linf_norms.size());
  d.r_t /= static_cast<double>(linf_norms.size());
  return d;
}

double floor_estimate(std::span<const double> series, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
    throw DomainError("floor_estimate: tail_fraction must lie in (0, 1]");
  const auto n = series.size();
  const auto take = static_cast<std::size_t>(std::floor(tail_fraction * static_cast<double>(n)));
  if (take == 0) throw DomainError("floor_estimate: the tail is empty");
  double s = 0.0;
  for (std::size_t k = n - take; k < n; ++k) s += series[k];
  return s / static_cast<double>(take);
}

double floor_estimate(const RunRecord& record, double tail_fraction) {
  std::vector<double> series;
  series.reserve(record.rows.size());
  const bool use_dist = record.kind != ProblemKind::Mnist && !record.w_star.empty();
  for (const auto& r : record.rows) series.push_back(use_dist ? r.dist2 : r.loss);
  return floor_estimate(series, tail_fraction);
}

double summary_floor(const RunRecord& record, double tail_fraction) {
  const double n = static_cast<double>(record.rows.size());
  return floor_estimate(record, n > 0 ? std::max(tail_fraction, 1.0 / n) : tail_fraction);
}

namespace {

RunRecord run_quadratic(const ExperimentConfig& config, std::uint64_t seed, const RunOptions& options) {
  const ProblemConfig& pc = config.problem;
  QuadraticProblem problem;
  if (pc.kind == ProblemKind::Toy) {
    Rng target_rng = make_stream(seed, StreamPurpose::Data, 0x70);
    problem = toy_problem(toy_target_16bit(target_rng));
  } else {
    problem.lipschitz = pc.lipschitz;
    problem.w_star = pc.w_star;
  }
  problem.noise = pc.noise;
  const std::size_t dim = problem.dim();

  // The parameter vector is one column: gradient = g * [1]^T.
  AnalogLayer layer = make_layer(config.settings, config.device, Matrix(dim, 1, pc.init), seed, 0);
  Rng noise_rng = make_stream(seed, StreamPurpose::Noise);
  const std::vector<double> one{1.0};
  const std::size_t n_tiles = layer.weights().num_tiles();
  const std::size_t grad_tile = layer.weights().top();
  const double tau = config.device.weight_max();

  RunRecord rec;
  rec.kind = pc.kind;
  rec.seed = seed;
  rec.num_tiles = n_tiles;
  rec.w_star = problem.w_star;

  double loss_sum = 0.0;
  double dist_sum = 0.0;
  std::size_t pulses = 0;
  std::size_t in_window = 0;
  double s_sum = 0.0;
  double r_sum = 0.0;
  std::int64_t counted = 0;

  for (std::int64_t t = 0; t < config.steps; ++t) {
    const std::vector<double> w = layer.weights().backward(one);
    loss_sum += problem.loss(w);
    dist_sum += problem.dist2(w);

    const double linf = layer.weights().tile(grad_tile).max_abs();
    if (options.keep_trajectory) rec.linf_trajectory.push_back(linf);
    const double ratio = linf * linf / (tau * tau);
    if (ratio >= 1.0) rec.saturated = true;
    else {
      s_sum += ratio / (1.0 - ratio);
      r_sum += 2.0 * problem.lipschitz / (1.0 - ratio);
    }
    ++counted;

    const std::vector<double> g = problem.gradient(w, noise_rng);
    pulses += layer.update(g, one).pulses;
    ++in_window;

    if (in_window == config.log_interval || t + 1 == config.steps) {
      IntervalRow row;
      row.t = t + 1;
      row.loss = loss_sum / static_cast<double>(in_window);
      row.dist2 = dist_sum / static_cast<double>(in_window);
      for (std::size_t n = 0; n < n_tiles; ++n) row.linf.push_back(layer.weights().tile(n).max_abs());
      row.pulses = pulses;
      const double inf = std::numeric_limits<double>::infinity();
      row.s_t = rec.saturated ? inf : s_sum / static_cast<double>(counted);
      row.r_t = rec.saturated ? inf : r_sum / static_cast<double>(counted);
      layer.record_loss(row.loss);
      rec.rows.push_back(std::move(row));
      loss_sum = dist_sum = 0.0;
      pulses = 0;
      in_window = 0;
    }
  }
  rec.final_weight = layer.weights().backward(one);
  rec.checkpoint = "{\"checkpoint_version\":1,\"layers\":[" + composite_checkpoint_json(layer.weights()) + "]}";
  return rec;
}

RunRecord run_mnist(const ExperimentConfig& config, std::uint64_t seed) {
  const ProblemConfig& pc = config.problem;
  Dataset train = load_mnist_split(pc.data_dir, "train");
  Dataset test = load_mnist_split(pc.data_dir, "t10k");
  if (pc.train_samples) train = train.head(pc.train_samples);
  if (pc.test_samples) test = test.head(pc.test_samples);
  if (train.features() != pc.mlp.sizes.front())
    throw ConfigError("problem.sizes: input size does not match the images");

  MlpTrainConfig mc;
  mc.spec = pc.mlp;
  mc.settings = config.settings;
  mc.device = config.device;
  mc.layer_kappa = pc.layer_kappa;
  mc.init_scale = pc.init_scale;
  mc.digital_lr = pc.digital_lr;
  mc.epochs = pc.epochs;
  mc.log_interval = config.log_interval;
  mc.seed = seed;
  MlpTrainer trainer(mc);

  RunRecord rec;
  rec.kind = ProblemKind::Mnist;
  rec.seed = seed;
  rec.num_tiles = config.settings.num_tiles;
  for (std::size_t e = 0; e < pc.epochs; ++e) {
    EpochReport rep = trainer.train_epoch(train, e);
    IntervalRow row;
    row.t = static_cast<std::int64_t>((e + 1) * train.count);
    row.loss = rep.train_loss;
    row.pulses = rep.pulses;
    row.test_accuracy = trainer.accuracy(test);
    rec.rows.push_back(row);
  }
  rec.final_accuracy = rec.rows.empty() ? 0.0 : rec.rows.back().test_accuracy;
  std::string cp = "{\"checkpoint_version\":1,\"layers\":[";
  bool first = true;
  for (std::size_t l = 0; l < pc.mlp.num_layers(); ++l) {
    if (!pc.mlp.analog[l]) continue;
    if (!first) cp += ",";
    first = false;
    cp += composite_checkpoint_json(trainer.layer(l).weights());
  }
  rec.checkpoint = cp + "]}";
  return rec;
}

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json summary_json(const ExperimentConfig& config, const RunRecord& r) {
  json s;
  s["seed"] = r.seed;
  s["algorithm"] = to_string(config.settings.algorithm);
  s["problem"] = to_string(r.kind);
  s["num_tiles"] = r.num_tiles;
  s["config_hash"] = config.hash();
  s["tail_fraction"] = config.tail_fraction;
  if (!r.rows.empty()) {
    s["final_loss"] = r.rows.back().loss;
    s["floor_estimate"] = summary_floor(r, config.tail_fraction);
  }
  if (r.kind == ProblemKind::Mnist) {
    s["test_accuracy"] = r.final_accuracy;
  } else {
    s["w_star"] = r.w_star;
    s["final_weight"] = r.final_weight;
    s["saturated"] = r.saturated;
    if (!r.rows.empty()) {
      s["S_T"] = finite_or_null(r.rows.back().s_t);
      s["R_T"] = finite_or_null(r.rows.back().r_t);
    }
  }
  return s;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace

RunRecord run_single(const ExperimentConfig& config, std::uint64_t seed, const RunOptions& options) {
  if (config.problem.kind == ProblemKind::Mnist) return run_mnist(config, seed);
  return run_quadratic(config, seed, options);
}

std::string metrics_csv(const RunRecord& record) {
  std::string out;
  if (record.kind == ProblemKind::Mnist) {
    out = "t,loss,test_accuracy,pulses\n";
    for (const auto& r : record.rows)
      out += std::to_string(r.t) + "," + num(r.loss) + "," + num(r.test_accuracy) + "," +
             std::to_string(r.pulses) + "\n";
    return out;
  }
  out = "t,loss,dist2";
  for (std::size_t n = 0; n < record.num_tiles; ++n) out += ",linf_tile_" + std::to_string(n);
  out += ",pulses,S_T,R_T\n";
  for (const auto& r : record.rows) {
    out += std::to_string(r.t) + "," + num(r.loss) + "," + num(r.dist2);
    for (double v : r.linf) out += "," + num(v);
    out += "," + std::to_string(r.pulses) + "," + num(r.s_t) + "," + num(r.r_t) + "\n";
  }
  return out;
}

std::string Lemma1Report::to_text() const {
  std::ostringstream os;
  os.precision(6);
  os << "lemma1: alpha=" << params.alpha << " x=" << params.x << " delta=" << params.delta
     << " dw_min=" << params.dw_min << " bl=" << params.bl << " trials=" << params.trials
     << " seed=" << params.seed << "\n"
     << "  p = " << p << "\n"
     << "  mean: empirical " << empirical_mean << ", oracle " << oracle_mean << ", SE "
     << standard_error << ", z " << z_mean << (mean_ok ? "  [ok]" : "  [FAIL]") << "\n"
     << "  variance: empirical " << empirical_variance << ", oracle " << oracle_variance
     << ", rel. error " << variance_rel_error << (variance_ok ? "  [ok]" : "  [FAIL]") << "\n"
     << "  time " << seconds << " s\n"
     << "  result: " << (passed() ? "PASS" : "FAIL") << "\n";
  return os.str();
}

Lemma1Report validate_lemma1(const Lemma1Params& params) {
  const auto start = std::chrono::steady_clock::now();
  if (params.trials < 2) throw DomainError("validate_lemma1: need at least two trials");
  Lemma1Report rep;
  rep.params = params;
  const NoiseMoments oracle = noise_moments_oracle(params.x, params.delta, params.alpha, params.dw_min, params.bl);
  rep.oracle_mean = oracle.mean;
  rep.oracle_variance = oracle.variance;
  rep.p = std::abs(params.alpha * params.x * params.delta) / (params.bl * params.dw_min);

  // Bounds wide enough that no trial can clamp.
  const double bound = (params.bl + 1) * params.dw_min;
  const DeviceModel device = DeviceModel::ideal(-bound, bound, params.dw_min);
  const std::vector<double> x{params.x};
  const std::vector<double> d{params.delta};
  const PulsePlan plan = plan_update(x, d, params.alpha, device, params.bl);
  Rng rng = make_stream(params.seed, StreamPurpose::Validate);

  // Welford
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t k = 0; k < params.trials; ++k) {
    Tile cell(1, 1, device);
    apply_rank_update(cell, plan, rng);
    const double v = cell.at(0, 0);
    const double dm = v - mean;
    mean += dm / static_cast<double>(k + 1);
    m2 += dm * (v - mean);
  }
  const double n = static_cast<double>(params.trials);
  rep.empirical_mean = mean;
  rep.empirical_variance = m2 / (n - 1.0);
  rep.standard_error = std::sqrt(rep.empirical_variance / n);
  const double diff = rep.empirical_mean - rep.oracle_mean;
  if (rep.standard_error > 0.0) {
    rep.z_mean = diff / rep.standard_error;
    rep.mean_ok = std::abs(rep.z_mean) < 4.0;
  } else {
    rep.mean_ok = diff == 0.0;
  }
  if (rep.oracle_variance > 0.0) {
    rep.variance_rel_error = rep.empirical_variance / rep.oracle_variance - 1.0;
    rep.variance_ok = std::abs(rep.variance_rel_error) < 0.05;
  } else {
    rep.variance_ok = rep.empirical_variance == 0.0;
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t jobs) {
  ExperimentResult result;
  if (config.lemma1) {
    result.lemma1 = validate_lemma1(*config.lemma1);
    result.validators_passed = result.lemma1->passed();
  }
  const std::size_t n = config.seeds.size();
  result.runs.resize(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < n;) {
      try {
        result.runs[k] = run_single(config, config.seeds[k]);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, n));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::filesystem::create_directories(config.output_dir);
  json agg;
  agg["config_hash"] = config.hash();
  agg["algorithm"] = to_string(config.settings.algorithm);
  agg["problem"] = to_string(config.problem.kind);
  agg["num_tiles"] = config.settings.num_tiles;
  agg["seeds"] = config.seeds;
  std::vector<double> finals;
  std::vector<double> floors;
  std::vector<double> accs;
  for (const RunRecord& r : result.runs) {
    const auto dir = config.output_dir / ("seed_" + std::to_string(r.seed));
    std::filesystem::create_directories(dir);
    write_file(dir / "metrics.csv", metrics_csv(r));
    const json s = summary_json(config, r);
    write_file(dir / "summary.json", s.dump(2) + "\n");
    if (config.write_checkpoint) write_file(dir / "checkpoint.json", r.checkpoint + "\n");
    if (s.contains("final_loss")) finals.push_back(s["final_loss"].get<double>());
    if (s.contains("floor_estimate")) floors.push_back(s["floor_estimate"].get<double>());
    if (r.kind == ProblemKind::Mnist) accs.push_back(r.final_accuracy);
  }
  if (!finals.empty()) agg["median_final_loss"] = median(finals);
  if (!floors.empty()) agg["median_floor_estimate"] = median(floors);
  if (!accs.empty()) agg["median_test_accuracy"] = median(accs);
  if (result.lemma1) {
    agg["lemma1"] = {{"passed", result.lemma1->passed()},
                     {"z_mean", result.lemma1->z_mean},
                     {"variance_rel_error", result.lemma1->variance_rel_error}};
  }
  agg["validators_passed"] = result.validators_passed;
  write_file(config.output_dir / "summary.json", agg.dump(2) + "\n");
  return result;
}

}  // namespace aimc
