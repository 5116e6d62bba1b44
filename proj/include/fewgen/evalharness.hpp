#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fewgen/cgan.hpp"
#include "fewgen/classify.hpp"
#include "fewgen/cptn.hpp"
#include "fewgen/data.hpp"

namespace fewgen {

/// Harmonic mean of two accuracies in percent: 2sn / (s + n), 0 when both are
/// 0.  Inputs outside [0, 100] raise ContractError.
double harmonic_mean(double s, double n);

/// Everything a single evaluation run needs, bundled so that arms of an
/// experiment can share identical settings.
struct PipelineConfig {
  std::size_t n_seen = 0;   // 0 = ceil(C / 2)
  std::size_t n_novel = 0;  // 0 = remaining classes
  double seen_holdout = 0.2;
  AggregationConfig agg;
  CptnConfig cptn;
  GanConfig gan;
  ClfConfig clf;
  BuildConfig build;
  double keep_fraction = 0.5;
  bool pruning = true;  // false => keep every synthesized row
  std::size_t jobs = 1; // concurrent runs; 0 = hardware concurrency

  void validate() const;
};

struct RunResult {
  std::uint64_t seed = 0;
  double seen_acc = 0.0;   // percent; 0 in FSL mode
  double novel_acc = 0.0;  // percent
  double harmonic = 0.0;   // percent; 0 in FSL mode
  double synth_quality = 0.0;  // mean 1 - cos distance; only when has_synth
  bool has_synth = false;
  std::vector<std::pair<std::uint32_t, double>> novel_recall;  // class id -> recall %
};

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1); 0 when n < 2
};

struct RunReport {
  TaskMode mode = TaskMode::Gfsl;
  Strategy strategy = Strategy::Learned;
  std::size_t k = 1;
  std::vector<RunResult> runs;
  Aggregate seen, novel, harmonic, quality;
  std::map<std::string, std::string> config_echo;

  std::string to_json() const;
  static RunReport from_json(const std::string& text);
};

/// Seed list for `runs` repetitions of a master seed.
std::vector<std::uint64_t> run_seeds(std::uint64_t master, std::size_t runs);

/**
 * Generalized few-shot evaluation: for every run seed, split classes, hold
 * out a per-class fraction of the seen records for testing, draw k shots per
 * novel class, run the strategy's pipeline (prototype training, adversarial
 * training, synthesis, pruning as applicable), train the joint-label-space
 * classifier, and score micro-averaged seen/novel accuracy plus their
 * harmonic mean.  Runs are independent and may execute concurrently;
 * aggregation is order-insensitive.
 */
RunReport run_gfsl(const Dataset& data, std::size_t k, Strategy strategy,
                   const std::vector<std::uint64_t>& seeds, const PipelineConfig& cfg);

/// Few-shot evaluation restricted to the novel label space (no seen rows in
/// the classifier's training set or test pool).
RunReport run_fsl(const Dataset& data, std::size_t k, Strategy strategy,
                  const std::vector<std::uint64_t>& seeds, const PipelineConfig& cfg);

/**
 * Synthesis-quality probe: generates `count` features per novel class from
 * the class's conditioning prototypes and returns the mean over classes of
 * 1 - cos(mean synthetic feature, mean real held-out feature).
 */
double synth_quality(const GanTriple& triple,
                     const std::vector<std::vector<Prototype>>& class_conditioning,
                     const std::vector<Matrix>& class_test_rows, std::size_t count,
                     std::uint64_t seed);

/// Mean per-class recall across runs (classes keyed by dense id).
std::map<std::uint32_t, double> per_class_accuracy(const std::vector<RunResult>& runs);

// --- reports -----------------------------------------------------------------

/// Aligned text table over a set of reports (one block per mode, one row per
/// strategy/k, mean +/- std columns).
std::string format_table(const std::vector<RunReport>& reports);

/// Flat per-run CSV:
/// mode,strategy,k,run,seed,seen,novel,harmonic,synth_quality
std::string format_csv(const std::vector<RunReport>& reports);

/// Writes report.csv, runs.json, and table.txt into `dir` (created if absent).
void write_reports(const std::string& dir, const std::vector<RunReport>& reports);

}  // namespace fewgen
