#pragma once

#include <cstdint>
#include <random>

namespace viewgen {

/// Root seed of an experiment.
struct RngSeed {
  std::uint64_t value = 0;
};

/// Named seed domains. Streams from different domains never share state,
/// which is how training clips and novel test clips are kept disjoint.
enum class SeedDomain : std::uint64_t {
  TrainingClips = 1,
  NovelClips = 2,
  PairSampling = 3,
  TrialSampling = 4,
  Training = 5,
  Evaluation = 6,
  Misc = 7,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Deterministic random stream.
///
/// Wraps std::mt19937_64 but does its own conversion to doubles so the
/// produced values are identical across standard library implementations
/// (std::uniform_real_distribution and friends are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(splitmix64(seed)) {}

  /// Independent stream for `(seed, domain, index)`.
  static Rng stream(RngSeed seed, SeedDomain domain, std::uint64_t index = 0) noexcept;

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n). `n` must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal (Box-Muller, one spare value cached).
  double normal();

  bool coin() { return (engine_() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace viewgen
