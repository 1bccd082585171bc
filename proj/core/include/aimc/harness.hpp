#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aimc/algorithms.hpp"
#include "aimc/device.hpp"
#include "aimc/mlp.hpp"
#include "aimc/problems.hpp"

namespace aimc {

inline constexpr int kConfigVersion = 1;

enum class ProblemKind { Quadratic, Toy, Mnist };

std::string to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(const std::string& name);

struct ProblemConfig {
  ProblemKind kind = ProblemKind::Quadratic;
  // quadratic / toy
  std::size_t dim = 1;
  double lipschitz = 1.0;
  std::vector<double> w_star;
  double init = 0.0;
  NoiseModel noise;
  // mnist
  MlpSpec mlp{{784, 64, 10}, LossKind::SoftmaxCrossEntropy, {true, true}};
  std::filesystem::path data_dir = "data/mnist";
  std::size_t train_samples = 0;
  std::size_t test_samples = 0;
  std::size_t epochs = 3;
  double digital_lr = 0.1;
  double init_scale = 1.0;
  std::vector<double> layer_kappa;
};

struct Lemma1Params {
  double x = 1.0;
  double delta = 1.0;
  double alpha = 0.1;
  double dw_min = 0.5;
  int bl = 10;
  std::size_t trials = 100000;
  std::uint64_t seed = 1;
};

/// Parsed and validated experiment description. See README for the file
/// format (JSON with a `config_version` key).
struct ExperimentConfig {
  int version = kConfigVersion;
  std::vector<std::uint64_t> seeds{1};
  ProblemConfig problem;
  DeviceModel device = DeviceModel::asymmetric_linear(-1.0, 1.0, 0.5);
  TrainerSettings settings;
  std::int64_t steps = 1000;
  /// Steps per metrics row (samples per loss-history entry for MNIST;
  /// 0 = once per epoch).
  std::size_t log_interval = 100;
  double tail_fraction = 0.2;
  std::filesystem::path output_dir = "out";
  bool write_checkpoint = true;
  std::optional<Lemma1Params> lemma1;
  /// Canonical JSON of the input, used for the config hash.
  std::string canonical;

  std::string hash() const;
};

/// Throws ConfigError with the offending key.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies SIM_SEED when set in the environment.
void apply_env_overrides(ExperimentConfig& config);

/// Re-derives dependent settings (default scales, periods and transfer
/// rates) after num_tiles or the device changed.
void set_num_tiles(ExperimentConfig& config, std::size_t num_tiles);

/// Sets a dotted key (e.g. "device.dw_min") to a JSON literal and re-parses.
/// The key "tiles" is shorthand for set_num_tiles.
void set_override(ExperimentConfig& config, const std::string& key, const std::string& json_value);

struct IntervalRow {
  std::int64_t t = 0;
  double loss = 0.0;
  double dist2 = 0.0;
  std::vector<double> linf;
  std::size_t pulses = 0;
  double s_t = 0.0;
  double r_t = 0.0;
  /// Classification runs only.
  double test_accuracy = 0.0;
};

struct RunRecord {
  ProblemKind kind = ProblemKind::Quadratic;
  std::uint64_t seed = 0;
  std::size_t num_tiles = 1;
  std::vector<IntervalRow> rows;
  /// Final effective weight (quadratic problems).
  std::vector<double> final_weight;
  std::vector<double> w_star;
  /// Set when some iterate reached the saturation bound (S_T diverges).
  bool saturated = false;
  double final_accuracy = 0.0;
  /// Step-level trajectory of the gradient tile's infinity norm, kept only
  /// when requested.
  std::vector<double> linf_trajectory;
  /// Final trained weights as checkpoint JSON.
  std::string checkpoint;
};

struct RunOptions {
  bool keep_trajectory = false;
};

/// One seed of one experiment; no files are written.
RunRecord run_single(const ExperimentConfig& config, std::uint64_t seed,
                     const RunOptions& options = {});

struct SRDiagnostics {
  double s_t = 0.0;
  double r_t = 0.0;
  bool saturated = false;
};

/// S_T = mean (n^2/tau^2) / (1 - n^2/tau^2), R_T = mean 2L / (1 - n^2/tau^2)
/// over the sequence of infinity norms n = |W_t|_inf. Saturated iterates
/// make both infinite and set the flag.
SRDiagnostics diagnostics_sr(std::span<const double> linf_norms, double tau_max, double lipschitz);

/// Mean of dist2 (or loss when no optimum is known) over the final
/// floor(tail_fraction * rows) rows. Throws DomainError when that is zero.
double floor_estimate(const RunRecord& record, double tail_fraction);
double floor_estimate(std::span<const double> series, double tail_fraction);

/// floor_estimate with the tail widened to at least the last row, as used in
/// summaries of short records.
double summary_floor(const RunRecord& record, double tail_fraction);

struct Lemma1Report {
  Lemma1Params params;
  double p = 0.0;
  double empirical_mean = 0.0;
  double empirical_variance = 0.0;
  double oracle_mean = 0.0;
  double oracle_variance = 0.0;
  double standard_error = 0.0;
  double z_mean = 0.0;
  double variance_rel_error = 0.0;
  bool mean_ok = false;
  bool variance_ok = false;
  double seconds = 0.0;
  bool passed() const { return mean_ok && variance_ok; }
  std::string to_text() const;
};

/// Monte-Carlo check of the pulsed update of one ideal-device cell against
/// the closed-form moments: |mean - oracle| < 4 SE, |var/oracle - 1| < 0.05.
Lemma1Report validate_lemma1(const Lemma1Params& params);

struct ExperimentResult {
  std::vector<RunRecord> runs;
  bool validators_passed = true;
  std::optional<Lemma1Report> lemma1;
};

/// Runs every seed (up to `jobs` in parallel) and writes per-seed
/// metrics.csv, summary.json and checkpoint.json under
/// output_dir/seed_<s>/, plus an aggregate summary.json.
ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t jobs = 1);

std::string metrics_csv(const RunRecord& record);

/// Checkpoint of one composite: tile shapes, device hashes, row-major
/// weights, cursors, scales (tile order) and counters.
std::string composite_checkpoint_json(const CompositeWeight& cw);
CompositeWeight composite_from_checkpoint_json(const std::string& text);
/// Human-readable description of a checkpoint file.
std::string inspect_checkpoint(const std::filesystem::path& path);

/// Median of a non-empty sample.
double median(std::vector<double> values);

}  // namespace aimc
