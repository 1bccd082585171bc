#pragma once

#include <cstddef>
#include <string>

#include "aimc/algorithms.hpp"

namespace aimc {

/// Per-sample weight-update cost inputs for one D x D layer.
struct CostParams {
  double D = 512;
  /// Mini-batch size.
  double B = 100;
  /// Transfer period.
  double n_s = 2;
  /// Average pulses per sample.
  double l_avg = 5;
  /// Nanoseconds per pulse slot.
  double t_sp = 5;
  /// Nanoseconds per MVM readout.
  double t_M = 40;
  /// Peak floating-point throughput in ops/s, shared by `share` tiles.
  double throughput = 0.7e12;
  double share = 4;

  void validate() const;
};

struct Latency {
  double fp_ops = 0;
  double fp_ns = 0;
  double analog_ns = 0;
  double total_ns() const { return fp_ns + analog_ns; }
};

/// Latency of one per-sample update. Defined for AnalogSgd, TikiTakaV2,
/// MixedPrecision and Residual; the residual figure is the N -> infinity
/// bound, so it takes no tile count.
Latency latency(Algorithm algo, const CostParams& p);
inline double latency_ns(Algorithm algo, const CostParams& p) { return latency(algo, p).total_ns(); }

/// Digital storage in bytes at one byte per element.
double storage_bytes(Algorithm algo, double D, double B);

}  // namespace aimc
