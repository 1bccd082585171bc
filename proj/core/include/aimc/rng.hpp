#pragma once

#include <cstdint>
#include <random>

namespace aimc {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used only to derive independent seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stream identifiers. Every random consumer in a run owns one stream whose
/// seed is derived from (run seed, purpose, a, b); adding a tile or a layer
/// never shifts the draws seen by the others.
enum class StreamPurpose : std::uint64_t {
  Tile = 1,
  Data = 2,
  Noise = 3,
  Init = 4,
  Validate = 5,
};

constexpr std::uint64_t derive_seed(std::uint64_t run_seed, StreamPurpose purpose,
                                    std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = mix64(run_seed);
  h = mix64(h ^ static_cast<std::uint64_t>(purpose));
  h = mix64(h ^ a);
  return mix64(h ^ (b + 0x632be59bd9b4e019ULL));
}

inline Rng make_stream(std::uint64_t run_seed, StreamPurpose purpose, std::uint64_t a = 0,
                       std::uint64_t b = 0) {
  return Rng{derive_seed(run_seed, purpose, a, b)};
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

}  // namespace aimc
