#pragma once

#include <cstdint>
#include <vector>

#include "fewgen/data.hpp"
#include "fewgen/net.hpp"

namespace fewgen {

enum class Pooling { None, Average, Max };

/// How a class's feature matrix is reduced to its aggregation target: mean
/// over the class, then optional non-overlapping window pooling by factor p.
struct AggregationConfig {
  Pooling pooling = Pooling::Average;
  std::size_t pool_factor = 4;

  std::size_t output_dim(std::size_t d_x) const;
  void validate(std::size_t d_x) const;  // throws ConfigError
};

struct Prototype {
  std::uint32_t class_id = 0;
  std::vector<double> values;
};

/// Mean over the class members followed by the configured pooling.
/// Throws ContractError for an empty member list.
Prototype aggregate_target(const std::vector<const FeatureRecord*>& members,
                           const AggregationConfig& cfg, std::uint32_t class_id);

/// Scalar similarity loss used for prototype training: 1 - cos(a, b) with
/// norms floored at 1e-12.  Range [0, 2].
double cosine_loss(const std::vector<double>& a, const std::vector<double>& b);

struct CptnConfig {
  std::size_t hidden = 0;  // 0 = d_x / 4 (at least 1)
  std::size_t epochs = 50;
  double lr = 0.005;
  double weight_decay = 0.0005;
  std::size_t batch = 64;
};

struct CptnTrainLog {
  std::vector<double> epoch_loss;  // mean cosine loss per epoch
};

/**
 * Trains the prototype network: a 2-layer MLP (LeakyRelu hidden, Sigmoid
 * output) regressing each sample onto its class's aggregation target under
 * the cosine loss.  `class_indices[c]` lists the record indices of class c;
 * empty lists are skipped (classes not in the training set).
 */
MlpNet train_cptn(const Dataset& data, const std::vector<std::vector<std::size_t>>& class_indices,
                  const AggregationConfig& agg, const CptnConfig& cfg, std::uint64_t seed,
                  CptnTrainLog* log = nullptr);

/// Mean of the per-shot network outputs.  Throws ContractError on empty shots.
Prototype infer_prototype(const MlpNet& net, const std::vector<const FeatureRecord*>& shots,
                          std::uint32_t class_id);

/// Pools a single feature vector by the configured window reduction (used for
/// the shot-mean and per-sample conditioning variants).
std::vector<double> pool_vector(const std::vector<double>& v, const AggregationConfig& cfg);

}  // namespace fewgen
