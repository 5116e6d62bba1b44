#pragma once

#include <iosfwd>
#include <string>

#include "fewgen/net.hpp"

namespace fewgen {

struct GanTriple;  // defined in cgan.hpp

/**
 * Trained-network blob ("PGM1"): layer count, then per layer the input/output
 * dims, an activation tag + slope, and the weights/biases as little-endian
 * doubles.  Loaders validate dimension chaining and reject non-finite values.
 */
void save_net(std::ostream& os, const MlpNet& net);
void save_net(const std::string& path, const MlpNet& net);
MlpNet load_net(std::istream& is);
MlpNet load_net(const std::string& path);

/**
 * Generator/discriminator/decoder bundle ("PGT1"): a JSON manifest with the
 * dimensions and training configuration snapshot, followed by the three
 * network blobs in generator, discriminator, decoder order.
 */
void save_gan(const std::string& path, const GanTriple& triple,
              const std::string& config_snapshot_json);
GanTriple load_gan(const std::string& path, std::string* config_snapshot_json = nullptr);

}  // namespace fewgen
