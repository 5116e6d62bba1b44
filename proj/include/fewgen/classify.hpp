#pragma once

#include <cstdint>
#include <vector>

#include "fewgen/data.hpp"
#include "fewgen/net.hpp"
#include "fewgen/synth.hpp"

namespace fewgen {

/// How novel-class training data is produced.
enum class Strategy { Base, Heuristic, Sample, Learned };

const char* strategy_name(Strategy s);

enum class TaskMode { Gfsl, Fsl };

/// Label space of a classification task.  GFSL spans seen + novel classes,
/// FSL only novel ones.  Ids are kept sorted so that output index order equals
/// ascending class id (argmax ties resolve to the lowest id).
struct ClassifierTask {
  TaskMode mode = TaskMode::Gfsl;
  std::vector<std::uint32_t> label_space;

  /// Output index of a class id; throws ContractError when absent.
  std::size_t index_of(std::uint32_t label) const;
};

struct TrainSet {
  Matrix x;
  std::vector<std::uint32_t> labels;
};

struct BuildConfig {
  std::size_t resample_multiple = 5;  // duplication factor for the no-synthesis baseline
  double jitter_scale = 0.01;         // jitter std = jitter_scale * global feature std
};

/**
 * Assembles the classifier training set: the seen rows (empty for FSL),
 * then per novel class its real shots followed by its synthetic rows.
 * For Strategy::Base the synthetic rows are ignored and each shot is instead
 * duplicated to `resample_multiple` copies; duplicates beyond the original
 * get Gaussian jitter so they are not exact repeats.
 */
TrainSet build_training_set(const Matrix& seen_rows, const std::vector<std::uint32_t>& seen_labels,
                            const Matrix& shot_rows, const std::vector<std::uint32_t>& shot_labels,
                            const std::vector<SyntheticSample>& synthetic, Strategy strategy,
                            const BuildConfig& cfg, std::uint64_t jitter_seed);

struct ClfConfig {
  std::size_t epochs = 30;
  double lr = 0.001;
  double weight_decay = 0.0;
  std::size_t batch = 64;
};

/// Single-layer softmax classifier trained with cross-entropy.
MlpNet train_classifier(const TrainSet& train, const ClassifierTask& task, const ClfConfig& cfg,
                        std::uint64_t seed);

struct Prediction {
  std::vector<std::uint32_t> labels;
  Matrix scores;  // batch x |label_space| logits
};

Prediction predict(const MlpNet& net, const ClassifierTask& task, const Matrix& rows);

}  // namespace fewgen
