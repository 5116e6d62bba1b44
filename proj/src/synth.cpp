#include "fewgen/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fewgen/errors.hpp"

namespace fewgen {

std::vector<SyntheticSample> synthesize_class(const GanTriple& triple,
                                              const std::vector<Prototype>& conditioning,
                                              std::size_t count, std::uint64_t seed) {
  if (conditioning.empty()) throw ContractError("synthesize_class: no conditioning prototypes");
  const std::uint32_t class_id = conditioning.front().class_id;
  for (const Prototype& p : conditioning) {
    if (p.values.size() != triple.d_phi) {
      throw ShapeError("synthesize_class: prototype dim " + std::to_string(p.values.size()) +
                       ", model expects " + std::to_string(triple.d_phi));
    }
    if (p.class_id != class_id) {
      throw ContractError("synthesize_class: conditioning mixes classes");
    }
  }

  Rng rng(seed);
  Matrix input(count, triple.d_phi + triple.d_z);
  for (std::size_t j = 0; j < count; ++j) {
    const std::vector<double>& proto = conditioning[j % conditioning.size()].values;
    for (std::size_t c = 0; c < triple.d_phi; ++c) input(j, c) = proto[c];
    for (std::size_t c = 0; c < triple.d_z; ++c) input(j, triple.d_phi + c) = rng.normal();
  }
  const Matrix features = triple.generator.forward(input);
  const Matrix decoded = triple.decoder.forward(features);

  std::vector<SyntheticSample> out(count);
  for (std::size_t j = 0; j < count; ++j) {
    const std::vector<double>& proto = conditioning[j % conditioning.size()].values;
    double dot = 0.0, nd = 0.0, np = 0.0;
    for (std::size_t c = 0; c < triple.d_phi; ++c) {
      const double d = decoded(j, c);
      dot += d * proto[c];
      nd += d * d;
      np += proto[c] * proto[c];
    }
    const double cos = dot / (std::max(std::sqrt(nd), 1e-12) * std::max(std::sqrt(np), 1e-12));
    SyntheticSample& s = out[j];
    s.class_id = class_id;
    s.gen_index = j;
    s.recon_loss = 1.0 - cos;
    s.values.resize(triple.d_x);
    for (std::size_t c = 0; c < triple.d_x; ++c) s.values[c] = features(j, c);
  }
  return out;
}

std::size_t default_count(const std::vector<std::size_t>& seen_class_counts) {
  if (seen_class_counts.empty()) {
    throw ContractError("default_count: no seen-class cardinalities");
  }
  const std::size_t largest =
      *std::max_element(seen_class_counts.begin(), seen_class_counts.end());
  if (largest == 0) throw ContractError("default_count: empty seen classes");
  return 2 * largest;
}

std::vector<SyntheticSample> prune(std::vector<SyntheticSample> samples, double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw ContractError("prune: keep fraction must lie in (0, 1]");
  }
  if (samples.empty()) return samples;
  const std::size_t keep = static_cast<std::size_t>(
      std::ceil(keep_fraction * static_cast<double>(samples.size())));
  std::sort(samples.begin(), samples.end(), [](const SyntheticSample& a, const SyntheticSample& b) {
    if (a.recon_loss != b.recon_loss) return a.recon_loss < b.recon_loss;
    return a.gen_index < b.gen_index;
  });
  samples.resize(std::min(keep, samples.size()));
  return samples;
}

}  // namespace fewgen
