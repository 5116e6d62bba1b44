#include "fewgen/cptn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fewgen/errors.hpp"

namespace fewgen {

std::size_t AggregationConfig::output_dim(std::size_t d_x) const {
  if (pooling == Pooling::None) return d_x;
  validate(d_x);
  return d_x / pool_factor;
}

void AggregationConfig::validate(std::size_t d_x) const {
  if (pooling == Pooling::None) return;
  if (pool_factor < 1) throw ConfigError("pool factor must be at least 1");
  if (d_x % pool_factor != 0) {
    throw ConfigError("pool factor " + std::to_string(pool_factor) +
                      " does not divide the feature dim " + std::to_string(d_x));
  }
}

std::vector<double> pool_vector(const std::vector<double>& v, const AggregationConfig& cfg) {
  if (cfg.pooling == Pooling::None) return v;
  cfg.validate(v.size());
  const std::size_t p = cfg.pool_factor;
  std::vector<double> out(v.size() / p);
  for (std::size_t w = 0; w < out.size(); ++w) {
    if (cfg.pooling == Pooling::Average) {
      double acc = 0.0;
      for (std::size_t j = 0; j < p; ++j) acc += v[w * p + j];
      out[w] = acc / static_cast<double>(p);
    } else {
      double m = v[w * p];
      for (std::size_t j = 1; j < p; ++j) m = std::max(m, v[w * p + j]);
      out[w] = m;
    }
  }
  return out;
}

Prototype aggregate_target(const std::vector<const FeatureRecord*>& members,
                           const AggregationConfig& cfg, std::uint32_t class_id) {
  if (members.empty()) throw ContractError("aggregate_target: class has no members");
  const std::size_t dim = members.front()->values.size();
  std::vector<double> mean(dim, 0.0);
  for (const FeatureRecord* r : members) {
    if (r->values.size() != dim) throw ShapeError("aggregate_target: member dim mismatch");
    for (std::size_t j = 0; j < dim; ++j) mean[j] += r->values[j];
  }
  for (double& m : mean) m /= static_cast<double>(members.size());
  Prototype p;
  p.class_id = class_id;
  p.values = pool_vector(mean, cfg);
  return p;
}

double cosine_loss(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ShapeError("cosine_loss: size mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::max(std::sqrt(na), 1e-12) * std::max(std::sqrt(nb), 1e-12);
  return 1.0 - dot / denom;
}

MlpNet train_cptn(const Dataset& data, const std::vector<std::vector<std::size_t>>& class_indices,
                  const AggregationConfig& agg, const CptnConfig& cfg, std::uint64_t seed,
                  CptnTrainLog* log) {
  if (cfg.epochs == 0) throw ConfigError("prototype training: epochs must be at least 1");
  if (cfg.batch == 0) throw ConfigError("prototype training: batch must be at least 1");
  agg.validate(data.dim);
  const std::size_t d_phi = agg.output_dim(data.dim);
  const std::size_t hidden = cfg.hidden > 0 ? cfg.hidden : std::max<std::size_t>(1, data.dim / 4);

  // Per-class aggregation targets over the provided index lists.
  std::vector<std::size_t> train_idx;
  std::vector<const std::vector<double>*> target_of;  // aligned with train_idx
  std::vector<std::vector<double>> targets(class_indices.size());
  for (std::size_t c = 0; c < class_indices.size(); ++c) {
    if (class_indices[c].empty()) continue;
    std::vector<const FeatureRecord*> members;
    members.reserve(class_indices[c].size());
    for (std::size_t i : class_indices[c]) members.push_back(&data.records[i]);
    targets[c] = aggregate_target(members, agg, static_cast<std::uint32_t>(c)).values;
  }
  for (std::size_t c = 0; c < class_indices.size(); ++c) {
    for (std::size_t i : class_indices[c]) {
      train_idx.push_back(i);
      target_of.push_back(&targets[c]);
    }
  }
  if (train_idx.empty()) throw ContractError("prototype training: no training records");

  Rng init_rng(child_seed(seed, Seed::NetInit));
  MlpNet net = make_mlp({data.dim, hidden, d_phi}, {Act::LeakyRelu, 0.01}, {Act::Sigmoid, 0.01},
                        init_rng);
  AdamState adam(net.params(), {cfg.lr, cfg.weight_decay, 0.9, 0.999, 1e-8});
  Rng shuffle_rng(child_seed(seed, Seed::CptnTrain));

  std::vector<std::size_t> order(train_idx.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t bsize = std::min(cfg.batch, order.size() - start);
      Matrix x(bsize, data.dim);
      Matrix tgt(bsize, d_phi);
      for (std::size_t b = 0; b < bsize; ++b) {
        const std::size_t pos = order[start + b];
        const FeatureRecord& rec = data.records[train_idx[pos]];
        for (std::size_t j = 0; j < data.dim; ++j) x(b, j) = rec.values[j];
        const std::vector<double>& t = *target_of[pos];
        for (std::size_t j = 0; j < d_phi; ++j) tgt(b, j) = t[j];
      }
      Tape tape;
      TapedNet taped = lift(tape, net, true);
      Expr pred = net_forward(taped, tape.constant(std::move(x)));
      Expr loss = mean_all(add_scalar(scale(cosine_rows(pred, tape.constant(std::move(tgt))), -1.0), 1.0));
      tape.backward(loss);
      adam.step(net.params(), collect_grads(tape, taped));
      epoch_loss += loss.value()(0, 0);
      ++batches;
    }
    if (log != nullptr) log->epoch_loss.push_back(epoch_loss / static_cast<double>(batches));
  }
  return net;
}

Prototype infer_prototype(const MlpNet& net, const std::vector<const FeatureRecord*>& shots,
                          std::uint32_t class_id) {
  if (shots.empty()) throw ContractError("infer_prototype: no shots");
  const std::size_t dim = net.in_dim();
  Matrix x = to_matrix(shots, dim);
  Matrix out = net.forward(x);
  Prototype p;
  p.class_id = class_id;
  p.values.assign(out.cols(), 0.0);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) p.values[c] += out(r, c);
  }
  for (double& v : p.values) v /= static_cast<double>(out.rows());
  return p;
}

}  // namespace fewgen
