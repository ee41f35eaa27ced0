#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace setloc {

/// Seedable stream generator built on std::mt19937_64.
///
/// Sub-streams are keyed by a root seed plus a list of integers (for range
/// noise: domain tag, timestep, beacon id, receiver id). Each key is folded
/// through SplitMix64 to produce the engine seed, so any component can be
/// regenerated independently of evaluation order. Uniform and normal draws
/// are computed here rather than by <random> distributions, whose output is
/// implementation-defined.
class StreamRng {
 public:
  explicit StreamRng(std::uint64_t seed);
  StreamRng(std::uint64_t seed, std::initializer_list<std::uint64_t> key);

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal by Box-Muller.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::uint64_t next() { return engine_(); }

  static std::uint64_t splitmix64(std::uint64_t x);

 private:
  std::mt19937_64 engine_;
};

/// Stream domain tags.
enum class StreamDomain : std::uint64_t { RangeNoise = 1, Calibration = 2, Corpus = 3 };

}  // namespace setloc
