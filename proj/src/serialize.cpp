#include "fewgen/serialize.hpp"

#include <fstream>
#include <sstream>

#include "fewgen/bytes.hpp"
#include "fewgen/cgan.hpp"
#include "fewgen/errors.hpp"

namespace fewgen {

static constexpr char kNetMagic[4] = {'P', 'G', 'M', '1'};
static constexpr char kGanMagic[4] = {'P', 'G', 'T', '1'};

static std::uint8_t act_tag(Act a) {
  switch (a) {
    case Act::Identity: return 0;
    case Act::LeakyRelu: return 1;
    case Act::Sigmoid: return 2;
  }
  throw ContractError("unknown activation");
}

static Act act_from_tag(std::uint8_t t) {
  switch (t) {
    case 0: return Act::Identity;
    case 1: return Act::LeakyRelu;
    case 2: return Act::Sigmoid;
  }
  throw IoError("unknown activation tag " + std::to_string(t));
}

void save_net(std::ostream& os, const MlpNet& net) {
  if (net.depth() == 0) throw ContractError("save_net: empty network");
  bytes::write_magic(os, kNetMagic);
  bytes::write_u32(os, static_cast<std::uint32_t>(net.depth()));
  for (const Layer& layer : net.layers()) {
    if (!layer.weight.all_finite() || !layer.bias.all_finite()) {
      throw ContractError("save_net: non-finite parameter value");
    }
    bytes::write_u32(os, static_cast<std::uint32_t>(layer.weight.cols()));
    bytes::write_u32(os, static_cast<std::uint32_t>(layer.weight.rows()));
    bytes::write_u8(os, act_tag(layer.act.kind));
    bytes::write_f64(os, layer.act.slope);
    for (std::size_t r = 0; r < layer.weight.rows(); ++r) {
      for (std::size_t c = 0; c < layer.weight.cols(); ++c) {
        bytes::write_f64(os, layer.weight(r, c));
      }
    }
    for (std::size_t c = 0; c < layer.bias.cols(); ++c) bytes::write_f64(os, layer.bias(0, c));
  }
  if (!os) throw IoError("save_net: stream write failed");
}

void save_net(const std::string& path, const MlpNet& net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  save_net(os, net);
}

MlpNet load_net(std::istream& is) {
  bytes::expect_magic(is, kNetMagic, "network blob");
  const std::uint32_t depth = bytes::read_u32(is, "layer count");
  if (depth == 0 || depth > 64) throw IoError("implausible layer count " + std::to_string(depth));
  MlpNet net;
  for (std::uint32_t l = 0; l < depth; ++l) {
    const std::uint32_t in = bytes::read_u32(is, "layer input dim");
    const std::uint32_t out = bytes::read_u32(is, "layer output dim");
    if (in == 0 || out == 0 || static_cast<std::uint64_t>(in) * out > (1u << 28)) {
      throw IoError("implausible layer dims " + std::to_string(in) + "x" + std::to_string(out));
    }
    Layer layer;
    layer.act.kind = act_from_tag(bytes::read_u8(is, "activation tag"));
    layer.act.slope = bytes::read_f64(is, "activation slope");
    layer.weight = Matrix(out, in);
    for (std::size_t r = 0; r < out; ++r) {
      for (std::size_t c = 0; c < in; ++c) layer.weight(r, c) = bytes::read_f64(is, "weight");
    }
    layer.bias = Matrix(1, out);
    for (std::size_t c = 0; c < out; ++c) layer.bias(0, c) = bytes::read_f64(is, "bias");
    if (!layer.weight.all_finite() || !layer.bias.all_finite()) {
      throw IoError("network blob contains non-finite values");
    }
    net.add_layer(std::move(layer));  // validates chaining
  }
  return net;
}

MlpNet load_net(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  return load_net(is);
}

void save_gan(const std::string& path, const GanTriple& triple,
              const std::string& config_snapshot_json) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  bytes::write_magic(os, kGanMagic);
  bytes::write_u32(os, static_cast<std::uint32_t>(config_snapshot_json.size()));
  os.write(config_snapshot_json.data(),
           static_cast<std::streamsize>(config_snapshot_json.size()));
  save_net(os, triple.generator);
  save_net(os, triple.discriminator);
  save_net(os, triple.decoder);
  if (!os) throw IoError("save_gan: stream write failed");
}

GanTriple load_gan(const std::string& path, std::string* config_snapshot_json) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  bytes::expect_magic(is, kGanMagic, path.c_str());
  const std::uint32_t len = bytes::read_u32(is, "manifest length");
  if (len > (1u << 24)) throw IoError("implausible manifest length");
  std::string manifest(len, '\0');
  if (!is.read(manifest.data(), len)) throw IoError("truncated manifest in " + path);
  if (config_snapshot_json != nullptr) *config_snapshot_json = manifest;
  GanTriple triple;
  triple.generator = load_net(is);
  triple.discriminator = load_net(is);
  triple.decoder = load_net(is);
  triple.d_x = triple.generator.out_dim();
  triple.d_phi = triple.decoder.out_dim();
  if (triple.generator.in_dim() < triple.d_phi) {
    throw IoError("generator input smaller than the prototype dim");
  }
  triple.d_z = triple.generator.in_dim() - triple.d_phi;
  if (triple.discriminator.in_dim() != triple.d_x + triple.d_phi ||
      triple.discriminator.out_dim() != 1 || triple.decoder.in_dim() != triple.d_x) {
    throw IoError("inconsistent network dims in " + path);
  }
  return triple;
}

}  // namespace fewgen
