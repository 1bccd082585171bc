#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "aimc/errors.hpp"
#include "aimc/harness.hpp"

namespace aimc {

using nlohmann::json;

namespace {

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json device_json(const DeviceModel& d) {
  json j;
  j["kind"] = to_string(d.kind());
  j["tau_min"] = d.tau_min();
  j["tau_max"] = d.tau_max();
  j["dw_min"] = d.dw_min();
  j["kappa"] = d.kappa();
  if (d.kind() == DeviceKind::Custom) {
    if (!d.q_plus_table()) throw FormatError("checkpoint: custom devices given as callables cannot be saved");
    j["knots"] = d.q_plus_table()->knots();
    j["q_plus"] = d.q_plus_table()->values();
    j["q_minus"] = d.q_minus_table()->values();
  }
  return j;
}

DeviceModel device_from_json(const json& j) {
  const DeviceKind kind = device_kind_from_string(j.at("kind").get<std::string>());
  const double lo = j.at("tau_min").get<double>();
  const double hi = j.at("tau_max").get<double>();
  const double dw = j.at("dw_min").get<double>();
  const double kappa = j.at("kappa").get<double>();
  switch (kind) {
    case DeviceKind::Ideal:
      return DeviceModel::ideal(lo, hi, dw, kappa);
    case DeviceKind::AsymmetricLinear:
      return DeviceModel::asymmetric_linear(lo, hi, dw, kappa);
    case DeviceKind::Custom: {
      const auto knots = j.at("knots").get<std::vector<double>>();
      return DeviceModel::custom(lo, hi, dw, PiecewiseLinear(knots, j.at("q_plus").get<std::vector<double>>()),
                                 PiecewiseLinear(knots, j.at("q_minus").get<std::vector<double>>()), kappa);
    }
  }
  throw FormatError("checkpoint: unknown device kind");
}

json composite_json(const CompositeWeight& cw) {
  json j;
  j["tiles"] = json::array();
  for (const Tile& t : cw.tiles()) {
    json tj;
    tj["rows"] = t.rows();
    tj["cols"] = t.cols();
    tj["device_hash"] = hex(t.model().hash());
    tj["device"] = device_json(t.model());
    tj["cursor"] = t.cursor();
    const auto w = t.weights().data();
    tj["weights"] = std::vector<double>(w.begin(), w.end());
    j["tiles"].push_back(std::move(tj));
  }
  j["gamma_vec"] = std::vector<double>(cw.scales().begin(), cw.scales().end());
  j["transfer_every"] = std::vector<std::int64_t>(cw.transfer_every().begin(), cw.transfer_every().end());
  j["t"] = cw.step();
  std::vector<std::int64_t> local;
  for (std::size_t n = 0; n < cw.num_tiles(); ++n) local.push_back(local_counter(cw.step(), n, cw.transfer_every()));
  j["local_counters"] = local;
  return j;
}

CompositeWeight composite_from(const json& j) {
  std::vector<Tile> tiles;
  for (const json& tj : j.at("tiles")) {
    DeviceModel dev = device_from_json(tj.at("device"));
    if (hex(dev.hash()) != tj.at("device_hash").get<std::string>())
      throw FormatError("checkpoint: device hash does not match the stored device");
    const auto rows = tj.at("rows").get<std::size_t>();
    const auto cols = tj.at("cols").get<std::size_t>();
    Tile tile(dev, GivenInit{Matrix(rows, cols, tj.at("weights").get<std::vector<double>>())});
    tile.set_cursor(tj.at("cursor").get<std::size_t>());
    tiles.push_back(std::move(tile));
  }
  CompositeWeight cw(std::move(tiles), j.at("gamma_vec").get<std::vector<double>>(),
                     j.at("transfer_every").get<std::vector<std::int64_t>>());
  cw.set_step(j.at("t").get<std::int64_t>());
  return cw;
}

}  // namespace

std::string composite_checkpoint_json(const CompositeWeight& cw) { return composite_json(cw).dump(); }

CompositeWeight composite_from_checkpoint_json(const std::string& text) {
  try {
    return composite_from(json::parse(text));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

std::string inspect_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json root;
  try {
    root = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  std::vector<json> layers;
  if (root.contains("layers"))
    layers = root.at("layers").get<std::vector<json>>();
  else
    layers.push_back(root);

  std::ostringstream os;
  os.precision(6);
  os << path.string() << ": " << layers.size() << " analog layer(s)\n";
  for (std::size_t l = 0; l < layers.size(); ++l) {
    CompositeWeight cw = [&] {
      try {
        return composite_from(layers[l]);
      } catch (const json::exception& e) {
        throw FormatError(path.string() + ": layer " + std::to_string(l) + ": " + e.what());
      }
    }();
    os << "layer " << l << ": " << cw.rows() << "x" << cw.cols() << ", " << cw.num_tiles()
       << " tile(s), t=" << cw.step() << "\n";
    for (std::size_t n = 0; n < cw.num_tiles(); ++n) {
      const Tile& t = cw.tile(n);
      os << "  tile " << n << ": scale " << cw.scales()[n] << ", max|w| " << t.max_abs()
         << ", cursor " << t.cursor() << ", t_n " << local_counter(cw.step(), n, cw.transfer_every())
         << ", " << t.model().describe() << "\n";
    }
    const Matrix eff = cw.effective_weight();
    double sum = 0.0;
    for (double v : eff.data()) sum += v;
    os << "  effective weight: max|w| " << eff.max_abs() << ", mean "
       << sum / static_cast<double>(eff.size()) << "\n";
  }
  return os.str();
}

}  // namespace aimc
