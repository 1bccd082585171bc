#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "aimc/errors.hpp"
#include "aimc/harness.hpp"

namespace aimc {

using nlohmann::json;

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Quadratic:
      return "quadratic";
    case ProblemKind::Toy:
      return "toy";
    case ProblemKind::Mnist:
      return "mnist";
  }
  return "unknown";
}

ProblemKind problem_kind_from_string(const std::string& name) {
  if (name == "quadratic") return ProblemKind::Quadratic;
  if (name == "toy") return ProblemKind::Toy;
  if (name == "mnist") return ProblemKind::Mnist;
  throw ConfigError("unknown problem kind '" + name + "'");
}

namespace {

/// Typed access to one JSON object that remembers its path for messages
/// and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  void mark(const std::string& key) { seen_.insert(key); }

  template <typename T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    return as<T>(key);
  }

  template <typename T>
  T require(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(where(key) + " is required");
    return as<T>(key);
  }

  Section sub(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, where(key));
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ConfigError(where(item.key()) + ": unknown key");
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  template <typename T>
  T as(const std::string& key) const {
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + ": wrong type");
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require_positive(double v, const std::string& what) {
  if (!(v > 0.0)) throw ConfigError(what + " must be positive");
}

DeviceModel parse_device(Section s) {
  const auto kind = s.get<std::string>("kind", "asymmetric_linear");
  const double tau_min = s.get<double>("tau_min", -1.0);
  const double tau_max = s.get<double>("tau_max", 1.0);
  const double dw_min = s.get<double>("dw_min", 0.5);
  const double kappa = s.get<double>("kappa", 1.0);
  std::vector<double> knots;
  std::vector<double> q_plus;
  std::vector<double> q_minus;
  DeviceKind k;
  try {
    k = device_kind_from_string(kind);
  } catch (const Error& e) {
    throw ConfigError(s.where("kind") + ": " + e.what());
  }
  if (k == DeviceKind::Custom) {
    knots = s.require<std::vector<double>>("knots");
    q_plus = s.require<std::vector<double>>("q_plus");
    q_minus = s.require<std::vector<double>>("q_minus");
  }
  s.finish();
  try {
    switch (k) {
      case DeviceKind::Ideal:
        return DeviceModel::ideal(tau_min, tau_max, dw_min, kappa);
      case DeviceKind::AsymmetricLinear:
        return DeviceModel::asymmetric_linear(tau_min, tau_max, dw_min, kappa);
      case DeviceKind::Custom:
        return DeviceModel::custom(tau_min, tau_max, dw_min, PiecewiseLinear(knots, q_plus),
                                   PiecewiseLinear(knots, q_minus), kappa);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("device: ") + e.what());
  }
  throw ConfigError("device: unreachable");
}

struct AlgorithmInputs {
  std::optional<double> gamma;
  std::optional<std::vector<double>> gamma_vec;
  std::optional<std::vector<std::int64_t>> transfer_every_vec;
  std::optional<std::vector<std::int64_t>> transfer_every;
  std::optional<double> transfer_lr;
  std::optional<std::vector<double>> transfer_lr_vec;
};

template <typename T>
std::optional<T> optional_key(Section& s, const std::string& key) {
  s.mark(key);
  if (!s.has(key)) return std::nullopt;
  return s.get<T>(key, T{});
}

void derive_layout(TrainerSettings& st, const AlgorithmInputs& in) {
  const std::size_t n_tiles = st.num_tiles;
  const std::size_t edges = n_tiles - 1;
  if (st.algorithm != Algorithm::Residual) {
    if (st.algorithm == Algorithm::TikiTakaV1 || st.algorithm == Algorithm::TikiTakaV2) {
      if (in.transfer_lr_vec) throw ConfigError("algorithm.transfer_lr_vec: Tiki-Taka takes transfer_lr");
      st.transfer_lr = {in.transfer_lr.value_or(0.1)};
    } else {
      st.transfer_lr.clear();
    }
    st.scales.clear();
    st.transfer_every.clear();
    return;
  }
  if (in.gamma && in.gamma_vec) throw ConfigError("algorithm: give gamma or gamma_vec, not both");
  if (in.gamma_vec) {
    if (in.gamma_vec->size() != n_tiles)
      throw ConfigError("algorithm.gamma_vec: length must equal num_tiles");
    st.scales = scales_from_reference(*in.gamma_vec);
  } else {
    const double g = in.gamma.value_or(0.5);
    if (!(g > 0.0 && g < 1.0)) throw ConfigError("algorithm.gamma must lie in (0, 1)");
    st.scales.assign(n_tiles, 1.0);
    for (std::size_t n = 1; n < n_tiles; ++n) st.scales[n] = st.scales[n - 1] * g;
  }
  for (double s : st.scales)
    if (!(s > 0.0)) throw ConfigError("algorithm.gamma_vec: scales must be positive");

  if (in.transfer_every_vec && in.transfer_every)
    throw ConfigError("algorithm: give transfer_every_vec or transfer_every, not both");
  if (in.transfer_every_vec) {
    if (in.transfer_every_vec->size() != n_tiles)
      throw ConfigError("algorithm.transfer_every_vec: length must equal num_tiles");
    st.transfer_every = inner_loops_from_periods(*in.transfer_every_vec);
  } else if (in.transfer_every) {
    if (in.transfer_every->size() != edges)
      throw ConfigError("algorithm.transfer_every: length must equal num_tiles - 1");
    st.transfer_every = *in.transfer_every;
  } else {
    st.transfer_every.assign(edges, 2);
  }
  for (auto t : st.transfer_every)
    if (t < 1) throw ConfigError("algorithm.transfer_every: periods must be >= 1");

  if (in.transfer_lr && in.transfer_lr_vec)
    throw ConfigError("algorithm: give transfer_lr or transfer_lr_vec, not both");
  if (in.transfer_lr_vec) {
    if (in.transfer_lr_vec->size() != edges)
      throw ConfigError("algorithm.transfer_lr_vec: length must equal num_tiles - 1");
    st.transfer_lr = *in.transfer_lr_vec;
  } else if (in.transfer_lr) {
    st.transfer_lr.assign(edges, *in.transfer_lr);
  } else {
    st.transfer_lr = default_transfer_lr(edges);
  }
}

NoiseModel parse_noise(Section s, const DeviceModel& device) {
  NoiseModel n;
  try {
    n.kind = noise_kind_from_string(s.get<std::string>("kind", "none"));
  } catch (const Error& e) {
    throw ConfigError(s.where("kind") + ": " + e.what());
  }
  n.sigma = s.get<double>("sigma", 0.0);
  n.tau_max = s.get<double>("tau_max", device.weight_max());
  s.finish();
  if (n.sigma < 0.0) throw ConfigError("problem.noise.sigma must be >= 0");
  require_positive(n.tau_max, "problem.noise.tau_max");
  return n;
}

}  // namespace

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Section top(root, "");
  if (!root.contains("config_version")) throw ConfigError("config_version is required");
  c.version = top.require<int>("config_version");
  if (c.version != kConfigVersion)
    throw ConfigError("unsupported config_version " + std::to_string(c.version));

  if (root.contains("seed") && root.contains("seeds")) throw ConfigError("give seed or seeds, not both");
  if (root.contains("seed"))
    c.seeds = {top.require<std::uint64_t>("seed")};
  else
    c.seeds = top.get<std::vector<std::uint64_t>>("seeds", {1});
  top.mark("seed");
  if (c.seeds.empty()) throw ConfigError("seeds must not be empty");

  c.device = parse_device(top.sub("device"));

  // problem
  {
    Section p = top.sub("problem");
    try {
      c.problem.kind = problem_kind_from_string(p.get<std::string>("kind", "quadratic"));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("problem.kind: ") + e.what());
    }
    ProblemConfig& pc = c.problem;
    if (pc.kind == ProblemKind::Mnist) {
      pc.mlp.sizes = p.get<std::vector<std::size_t>>("sizes", pc.mlp.sizes);
      pc.mlp.loss = loss_kind_from_string(p.get<std::string>("loss", "cross_entropy"));
      pc.mlp.analog = p.get<std::vector<bool>>("analog", std::vector<bool>(pc.mlp.num_layers(), true));
      pc.data_dir = p.get<std::string>("data_dir", pc.data_dir.string());
      pc.train_samples = p.get<std::size_t>("train_samples", 0);
      pc.test_samples = p.get<std::size_t>("test_samples", 0);
      pc.epochs = p.get<std::size_t>("epochs", 3);
      pc.digital_lr = p.get<double>("digital_lr", 0.1);
      pc.init_scale = p.get<double>("init_scale", 1.0);
      pc.layer_kappa = p.get<std::vector<double>>("layer_kappa", {});
      try {
        pc.mlp.validate();
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("problem: ") + e.what());
      }
      if (pc.epochs == 0) throw ConfigError("problem.epochs must be >= 1");
      require_positive(pc.digital_lr, "problem.digital_lr");
      require_positive(pc.init_scale, "problem.init_scale");
      if (!pc.layer_kappa.empty() && pc.layer_kappa.size() != pc.mlp.num_layers())
        throw ConfigError("problem.layer_kappa: one entry per layer");
      for (double k : pc.layer_kappa) require_positive(k, "problem.layer_kappa");
    } else {
      const bool toy = pc.kind == ProblemKind::Toy;
      pc.dim = p.get<std::size_t>("dim", 1);
      if (pc.dim == 0) throw ConfigError("problem.dim must be >= 1");
      pc.lipschitz = p.get<double>("lipschitz", toy ? 2.0 : 1.0);
      require_positive(pc.lipschitz, "problem.lipschitz");
      if (toy) {
        if (pc.dim != 1) throw ConfigError("problem.dim: the toy problem is scalar");
        if (pc.lipschitz != 2.0) throw ConfigError("problem.lipschitz: the toy problem has L = 2");
      } else {
        if (p.has("w_star") && p.has("w_star_value"))
          throw ConfigError("problem: give w_star or w_star_value, not both");
        if (p.has("w_star")) {
          pc.w_star = p.get<std::vector<double>>("w_star", {});
          if (pc.w_star.size() != pc.dim) throw ConfigError("problem.w_star: length must equal dim");
        } else {
          pc.w_star.assign(pc.dim, p.get<double>("w_star_value", 0.0));
        }
        p.mark("w_star_value");
      }
      pc.init = p.get<double>("init", 0.0);
      if (pc.init < c.device.weight_min() || pc.init > c.device.weight_max())
        throw ConfigError("problem.init lies outside the device bounds");
      pc.noise = parse_noise(p.sub("noise"), c.device);
    }
    p.finish();
  }

  // algorithm
  {
    Section a = top.sub("algorithm");
    TrainerSettings& st = c.settings;
    try {
      st.algorithm = algorithm_from_string(a.get<std::string>("name", "analog_sgd"));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("algorithm.name: ") + e.what());
    }
    st.alpha = a.get<double>("alpha", 0.1);
    require_positive(st.alpha, "algorithm.alpha");
    const std::size_t default_tiles =
        (st.algorithm == Algorithm::TikiTakaV1 || st.algorithm == Algorithm::TikiTakaV2) ? 2 : 1;
    st.num_tiles = a.get<std::size_t>("num_tiles", default_tiles);
    if (st.algorithm != Algorithm::Residual && st.num_tiles != default_tiles)
      throw ConfigError("algorithm.num_tiles: " + to_string(st.algorithm) + " uses " +
                        std::to_string(default_tiles) + " tile(s)");
    if (st.num_tiles < 1) throw ConfigError("algorithm.num_tiles must be >= 1");
    st.warm_start = a.get<bool>("warm_start", true);
    st.tt_every = a.get<std::int64_t>("tt_every", 2);
    st.tt_gamma = a.get<double>("tt_gamma", 0.0);
    st.ttv2_decay = a.get<double>("ttv2_decay", 1.0);
    st.history_capacity = a.get<std::size_t>("history_capacity", 64);
    if (st.tt_every < 1) throw ConfigError("algorithm.tt_every must be >= 1");
    if (st.tt_gamma < 0.0) throw ConfigError("algorithm.tt_gamma must be >= 0");
    if (st.ttv2_decay < 0.0 || st.ttv2_decay > 1.0) throw ConfigError("algorithm.ttv2_decay must lie in [0, 1]");

    AlgorithmInputs in;
    in.gamma = optional_key<double>(a, "gamma");
    in.gamma_vec = optional_key<std::vector<double>>(a, "gamma_vec");
    in.transfer_every_vec = optional_key<std::vector<std::int64_t>>(a, "transfer_every_vec");
    in.transfer_every = optional_key<std::vector<std::int64_t>>(a, "transfer_every");
    in.transfer_lr = optional_key<double>(a, "transfer_lr");
    in.transfer_lr_vec = optional_key<std::vector<double>>(a, "transfer_lr_vec");
    a.finish();
    derive_layout(st, in);
    for (double b : st.transfer_lr) require_positive(b, "algorithm.transfer_lr");
  }

  c.steps = top.get<std::int64_t>("steps", 1000);
  if (c.problem.kind != ProblemKind::Mnist && c.steps < 1) throw ConfigError("steps must be >= 1");
  const std::size_t default_interval = c.problem.kind == ProblemKind::Mnist ? 0 : 100;
  c.log_interval = top.get<std::size_t>("log_interval", default_interval);
  if (c.problem.kind != ProblemKind::Mnist && c.log_interval == 0)
    throw ConfigError("log_interval must be >= 1");
  c.tail_fraction = top.get<double>("tail_fraction", 0.2);
  if (!(c.tail_fraction > 0.0 && c.tail_fraction <= 1.0))
    throw ConfigError("tail_fraction must lie in (0, 1]");

  {
    Section o = top.sub("output");
    c.output_dir = o.get<std::string>("dir", "out");
    c.write_checkpoint = o.get<bool>("checkpoint", true);
    o.finish();
  }

  if (root.contains("validators")) {
    Section v = top.sub("validators");
    if (v.has("lemma1")) {
      Section l = v.sub("lemma1");
      Lemma1Params lp;
      lp.x = l.get<double>("x", lp.x);
      lp.delta = l.get<double>("delta", lp.delta);
      lp.alpha = l.get<double>("alpha", lp.alpha);
      lp.dw_min = l.get<double>("dw_min", lp.dw_min);
      lp.bl = l.get<int>("bl", lp.bl);
      lp.trials = l.get<std::size_t>("trials", lp.trials);
      lp.seed = l.get<std::uint64_t>("seed", lp.seed);
      l.finish();
      c.lemma1 = lp;
    }
    v.finish();
  }
  top.finish();
  c.canonical = root.dump();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig c = parse_config(ss.str());
  return c;
}

void apply_env_overrides(ExperimentConfig& config) {
  const char* env = std::getenv("SIM_SEED");
  if (!env || !*env) return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0') throw ConfigError("SIM_SEED must be an unsigned integer");
  config.seeds = {static_cast<std::uint64_t>(v)};
  json j = json::parse(config.canonical);
  j.erase("seed");
  j["seeds"] = config.seeds;
  config.canonical = j.dump();
}

void set_num_tiles(ExperimentConfig& config, std::size_t num_tiles) {
  json j = json::parse(config.canonical);
  j["algorithm"]["num_tiles"] = num_tiles;
  // Vectors sized by the old tile count no longer apply.
  auto& a = j["algorithm"];
  if (a.contains("gamma_vec")) {
    const auto old = a["gamma_vec"].get<std::vector<double>>();
    // Keep the geometric ratio of the reference vector when it has one.
    double g = 0.5;
    if (old.size() >= 2 && old[old.size() - 1] > 0) g = old[old.size() - 2] / old[old.size() - 1];
    a.erase("gamma_vec");
    a["gamma"] = g;
  }
  if (a.contains("transfer_every_vec")) {
    const auto old = a["transfer_every_vec"].get<std::vector<std::int64_t>>();
    std::vector<std::int64_t> periods(num_tiles);
    const std::int64_t base = old.empty() ? 2 : old[0];
    const std::int64_t ratio = old.size() >= 2 && old[0] > 0 ? old[1] / old[0] : 2;
    std::int64_t v = base;
    for (auto& p : periods) {
      p = v;
      v *= ratio;
    }
    a["transfer_every_vec"] = periods;
  }
  if (a.contains("transfer_every")) {
    const auto old = a["transfer_every"].get<std::vector<std::int64_t>>();
    a["transfer_every"] = std::vector<std::int64_t>(num_tiles - 1, old.empty() ? 2 : old.front());
  }
  if (a.contains("transfer_lr_vec")) {
    a.erase("transfer_lr_vec");
  }
  const auto seeds = config.seeds;
  config = parse_config(j.dump());
  config.seeds = seeds;
}

void set_override(ExperimentConfig& config, const std::string& key, const std::string& json_value) {
  json value;
  try {
    value = json::parse(json_value);
  } catch (const json::parse_error&) {
    value = json_value;  // bare strings
  }
  if (key == "tiles" || key == "algorithm.num_tiles") {
    if (!value.is_number_unsigned() || value.get<std::size_t>() < 1)
      throw ConfigError("tiles must be a positive integer");
    set_num_tiles(config, value.get<std::size_t>());
    return;
  }
  json j = json::parse(config.canonical);
  json* node = &j;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("bad override key '" + key + "'");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    node = &(*node)[part];
    if (!node->is_object() && !node->is_null()) throw ConfigError("override key '" + key + "' crosses a value");
    start = dot + 1;
  }
  if (key == "seed" || key == "seeds") {
    j.erase(key == "seed" ? "seeds" : "seed");
  }
  const auto seeds = config.seeds;
  config = parse_config(j.dump());
  if (key != "seed" && key != "seeds") config.seeds = seeds;
}

}  // namespace aimc
