#pragma once

#include <cstdint>
#include <vector>

#include "fewgen/cgan.hpp"

namespace fewgen {

struct SyntheticSample {
  std::uint32_t class_id = 0;
  std::size_t gen_index = 0;  // draw order within the class
  double recon_loss = 0.0;    // 1 - cos(decoder(feature), conditioning prototype)
  std::vector<double> values;
};

/**
 * Draws `count` synthetic features for one class.  `conditioning` holds one or
 * more prototype vectors; draw j uses conditioning[j % size] (a single
 * prototype is simply reused, per-shot prototypes are cycled).  Each sample is
 * scored by the decoder against the prototype that produced it.
 */
std::vector<SyntheticSample> synthesize_class(const GanTriple& triple,
                                              const std::vector<Prototype>& conditioning,
                                              std::size_t count, std::uint64_t seed);

/// Default per-class draw count: twice the largest seen-class training
/// cardinality.
std::size_t default_count(const std::vector<std::size_t>& seen_class_counts);

/**
 * Keeps the ceil(keep_fraction * n) samples with the smallest reconstruction
 * loss; ties resolve by generation index, so the result is deterministic.
 * keep_fraction must lie in (0, 1]; 1.0 disables pruning.
 */
std::vector<SyntheticSample> prune(std::vector<SyntheticSample> samples, double keep_fraction);

}  // namespace fewgen
