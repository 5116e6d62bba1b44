#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fewgen/matrix.hpp"

namespace fewgen {

/// One labeled feature vector.  Values are stored at file precision (f32);
/// all computation promotes to double.
struct FeatureRecord {
  std::uint32_t label = 0;
  std::vector<float> values;

  bool operator==(const FeatureRecord&) const = default;
};

/// A loaded feature set with dense labels 0..C-1.  `original_labels[i]` is the
/// label that dense id `i` carried in the source file.
struct Dataset {
  std::vector<FeatureRecord> records;
  std::size_t dim = 0;
  std::vector<std::uint32_t> original_labels;

  std::size_t class_count() const { return original_labels.size(); }
};

/**
 * Loads a feature file, auto-detected by content: binary ("PGF1" magic) or
 * CSV with header `label,f0,f1,...`.  Labels are remapped to dense ids in
 * ascending order of the original labels; record order is preserved.
 * Non-finite values and malformed rows raise IngestError naming the row.
 */
Dataset load_features(const std::string& path);

/// CSV writer (`label,f0,f1,...` header; floats at full f32 precision).
void save_features_csv(const std::string& path, const std::vector<FeatureRecord>& records,
                       std::size_t dim);
/// Binary writer: "PGF1", u32 count, u32 dim, then per record u32 label + f32s.
void save_features_binary(const std::string& path, const std::vector<FeatureRecord>& records,
                          std::size_t dim);

/// Record indices grouped by dense class id.
std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& ds);

/// Stacks the given records into a batch matrix (doubles).
Matrix to_matrix(const std::vector<FeatureRecord>& records, std::size_t dim);
Matrix to_matrix(const std::vector<const FeatureRecord*>& records, std::size_t dim);

// --- splits ------------------------------------------------------------------

struct SplitResult {
  std::vector<std::uint32_t> seen, novel;  // dense class ids, sorted ascending
};

/// Uniform random partition of {0..n_classes-1} into disjoint seen/novel sets.
SplitResult split_classes(std::size_t n_classes, std::size_t n_seen, std::size_t n_novel,
                          std::uint64_t seed);

struct ShotSplit {
  std::vector<std::size_t> shots, heldout;  // positions within the class list
};

/// Draws k distinct shot positions out of class_size; the remainder is the
/// held-out pool.  Requires 1 <= k < class_size.
ShotSplit sample_k_shots(std::size_t class_size, std::size_t k, std::uint64_t seed);

// --- synthetic benchmark -----------------------------------------------------

/**
 * Gaussian-cluster benchmark: each class mean is drawn coordinate-wise from
 * U[0, mean_scale), then per_class samples are drawn N(mean, within_std^2 I)
 * and quantized to f32.  Class c owns the child stream (seed, BenchmarkClass, c),
 * so any subset of classes is reproducible in isolation.
 */
struct BenchmarkSpec {
  std::size_t classes = 16;
  std::size_t dim = 64;
  std::size_t per_class = 50;
  double mean_scale = 1.0;
  double within_std = 0.25;
  std::uint64_t seed = 42;
};

Dataset generate_benchmark(const BenchmarkSpec& spec);

}  // namespace fewgen
