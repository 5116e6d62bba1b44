#pragma once

#include <cstdint>
#include <vector>

namespace fewgen {

/// splitmix64 finalizer. Used for seed expansion and child-seed derivation.
std::uint64_t mix64(std::uint64_t z);

/**
 * Deterministic pseudo-random generator (xoshiro256++ with splitmix64 seeding).
 *
 * The algorithm is fixed by this library rather than delegated to the standard
 * library so that a given seed produces the same stream on every platform and
 * toolchain.  All randomness in the project flows through this class.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1), 53 bits of entropy.
  double uniform();
  double uniform(double lo, double hi);

  /// Standard normal draw (Marsaglia polar method, spare value cached).
  double normal();
  double normal(double mean, double stddev);

  /// Unbiased uniform integer in [0, n). Requires n >= 1.
  std::uint64_t below(std::uint64_t n);

  /// Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::uint64_t i = v.size() - 1; i >= 1; --i) {
      const std::uint64_t j = below(i + 1);
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/**
 * Purpose tags for child-seed derivation.  Every randomized stage of the
 * pipeline owns its own child generator so that stages can be reordered,
 * parallelized, or rerun in isolation without perturbing one another.
 */
enum class Seed : std::uint64_t {
  Run = 1,         // per-run seed derived from the master seed
  ClassSplit,      // seen/novel class partition
  SeenHoldout,     // per-class seen train/test holdout
  ShotSampling,    // novel k-shot draw
  BenchmarkClass,  // synthetic benchmark, one stream per class
  NetInit,         // network weight initialization
  CptnTrain,       // prototype-network minibatch shuffling
  GanTrain,        // adversarial training shuffling
  GanNoise,        // generator noise draws during training
  GanInterp,       // gradient-penalty interpolation coefficients
  GanPairs,        // unmatched-pair sampling for the embedding loss
  ClfTrain,        // classifier init + minibatch shuffling
  Synthesis,       // feature synthesis noise, one stream per class
  Jitter,          // duplication jitter for the augmentation baseline
  Quality,         // synthesis-quality probe draws
};

/**
 * Child-seed derivation rule (documented, stable):
 *   h = mix64(master + 0x9E3779B97F4A7C15 * uint64(purpose))
 *   child = mix64(h ^ (0xBF58476D1CE4E5B9 * (index + 1)))
 */
std::uint64_t child_seed(std::uint64_t master, Seed purpose, std::uint64_t index = 0);

}  // namespace fewgen
