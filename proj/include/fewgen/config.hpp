#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fewgen/classify.hpp"
#include "fewgen/evalharness.hpp"

namespace fewgen {

/**
 * Flat key=value configuration shared by the command-line tools.
 * Precedence: built-in defaults < config file < command-line flags.
 * Unknown keys are rejected; the resolved configuration is echoed into every
 * report.
 */
struct Config {
  // experiment
  std::string mode = "gfsl";           // gfsl | fsl | both
  std::string strategies = "learned";  // comma list or "all"
  std::string k = "1";                 // comma list of shot counts
  std::size_t runs = 20;
  std::uint64_t seed = 42;
  std::size_t jobs = 1;                // 0 = hardware concurrency

  // class split
  std::size_t seen_classes = 0;  // 0 = ceil(C / 2)
  std::size_t novel_classes = 0; // 0 = remaining classes
  double seen_holdout = 0.2;

  // aggregation
  std::string pooling = "avg";  // avg | max | none
  std::size_t pool_factor = 4;

  // prototype network
  std::size_t cptn_hidden = 0;  // 0 = d_x / 4
  std::size_t cptn_epochs = 50;
  double cptn_lr = 0.005;
  double cptn_weight_decay = 0.0005;
  std::size_t cptn_batch = 64;

  // adversarial model
  std::size_t d_z = 0;  // 0 = prototype dim
  std::size_t gen_hidden = 0, disc_hidden = 0, dec_hidden = 0;  // 0 = d_x
  double alpha = 10.0;
  double lambda = 0.01;
  double gamma = 0.1;
  double gan_lr = 0.001;
  double gan_weight_decay = 0.0001;
  std::size_t gan_epochs = 25;
  std::size_t gan_batch = 64;
  std::size_t critic_steps = 5;

  // classifier
  std::size_t clf_epochs = 30;
  double clf_lr = 0.001;
  double clf_weight_decay = 0.0;
  std::size_t clf_batch = 64;

  // synthesis
  double keep_fraction = 0.5;
  std::string pruning = "on";  // on | off
  std::size_t resample_multiple = 5;
  double jitter_scale = 0.01;

  // synthetic benchmark generation
  std::size_t bench_classes = 16;
  std::size_t bench_dim = 64;
  std::size_t bench_per_class = 50;
  double bench_mean_scale = 1.0;
  double bench_std = 0.25;

  /// Applies one key=value assignment; throws ConfigError on unknown keys or
  /// unparsable values.
  void apply(const std::string& key, const std::string& value);

  /// Resolved configuration as sorted key -> printed value (report echo).
  std::map<std::string, std::string> echo() const;

  /// Converts to the harness form; validates cross-field constraints.
  PipelineConfig pipeline() const;

  std::vector<Strategy> strategy_list() const;
  std::vector<std::size_t> k_list() const;
  std::vector<TaskMode> mode_list() const;
};

/// Reads `key=value` lines ('#' comments and blank lines allowed).
void load_config_file(const std::string& path, Config& cfg);

/// Key names and one-line descriptions, for --help output.
const std::vector<std::pair<std::string, std::string>>& config_key_help();

}  // namespace fewgen
