#include "aimc/costmodel.hpp"

#include "aimc/errors.hpp"

namespace aimc {

void CostParams::validate() const {
  if (!(D > 0 && B > 0 && n_s > 0 && l_avg >= 0 && t_sp >= 0 && t_M >= 0 && throughput > 0 && share > 0))
    throw ConfigError("cost parameters must be positive");
}

Latency latency(Algorithm algo, const CostParams& p) {
  p.validate();
  // ops / (ops per ns)
  const double ops_per_ns = p.throughput / p.share * 1e-9;
  Latency l;
  switch (algo) {
    case Algorithm::AnalogSgd:
      l.fp_ops = 2 * p.D;
      l.analog_ns = p.l_avg * p.t_sp;
      break;
    case Algorithm::TikiTakaV2:
      if (p.n_s < 2) throw ConfigError("TT-v2 cost needs n_s >= 2");
      l.fp_ops = 2 * p.D + 2 * p.D / p.n_s;
      l.analog_ns = (p.l_avg + 1 / p.n_s) * p.t_sp + p.t_M / p.n_s;
      break;
    case Algorithm::MixedPrecision:
      l.fp_ops = 2 * p.D * p.D + p.D;
      l.analog_ns = p.D / p.B * p.t_sp;
      break;
    case Algorithm::Residual:
      if (p.n_s < 2) throw ConfigError("residual cost needs n_s >= 2");
      l.fp_ops = 2 * p.D;
      l.analog_ns = p.l_avg * p.t_sp * p.n_s / (p.n_s - 1) + p.t_M / (p.n_s - 1);
      break;
    case Algorithm::TikiTakaV1:
      throw ConfigError("no cost model for TT-v1");
  }
  l.fp_ns = l.fp_ops / ops_per_ns;
  return l;
}

double storage_bytes(Algorithm algo, double D, double B) {
  if (!(D > 0 && B > 0)) throw ConfigError("storage: dimensions must be positive");
  switch (algo) {
    case Algorithm::AnalogSgd:
    case Algorithm::Residual:
      return 2 * D;
    case Algorithm::TikiTakaV2:
      return D * D + 2 * D;
    case Algorithm::MixedPrecision:
      return D * D + 2 * D * B;
    case Algorithm::TikiTakaV1:
      break;
  }
  throw ConfigError("no storage model for TT-v1");
}

}  // namespace aimc
