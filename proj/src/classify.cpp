#include "fewgen/classify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "fewgen/errors.hpp"
#include "fewgen/rng.hpp"
#include "fewgen/tape.hpp"

namespace fewgen {

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Base: return "base";
    case Strategy::Heuristic: return "heuristic";
    case Strategy::Sample: return "sample";
    case Strategy::Learned: return "learned";
  }
  throw ContractError("strategy_name: unknown strategy");
}

std::size_t ClassifierTask::index_of(std::uint32_t label) const {
  const auto it = std::lower_bound(label_space.begin(), label_space.end(), label);
  if (it == label_space.end() || *it != label) {
    throw ContractError("classifier task: label " + std::to_string(label) +
                        " is outside the label space");
  }
  return static_cast<std::size_t>(it - label_space.begin());
}

TrainSet build_training_set(const Matrix& seen_rows, const std::vector<std::uint32_t>& seen_labels,
                            const Matrix& shot_rows, const std::vector<std::uint32_t>& shot_labels,
                            const std::vector<SyntheticSample>& synthetic, Strategy strategy,
                            const BuildConfig& cfg, std::uint64_t jitter_seed) {
  if (seen_rows.rows() != seen_labels.size()) {
    throw ShapeError("build_training_set: seen rows and labels disagree");
  }
  if (shot_rows.rows() != shot_labels.size()) {
    throw ShapeError("build_training_set: shot rows and labels disagree");
  }
  if (shot_rows.rows() == 0) throw ContractError("build_training_set: no novel shots");
  const std::size_t dim = shot_rows.cols();
  if (seen_rows.rows() > 0 && seen_rows.cols() != dim) {
    throw ShapeError("build_training_set: seen and shot feature dims differ");
  }

  // Group shots and synthetic rows by class, preserving the given row order
  // within each class.
  std::map<std::uint32_t, std::vector<std::size_t>> shots_by_class;
  for (std::size_t i = 0; i < shot_labels.size(); ++i) shots_by_class[shot_labels[i]].push_back(i);
  std::map<std::uint32_t, std::vector<std::size_t>> synth_by_class;
  if (strategy != Strategy::Base) {
    for (std::size_t i = 0; i < synthetic.size(); ++i) {
      if (synthetic[i].values.size() != dim) {
        throw ShapeError("build_training_set: synthetic feature dim mismatch");
      }
      synth_by_class[synthetic[i].class_id].push_back(i);
    }
    for (const auto& [cls, rows] : synth_by_class) {
      if (shots_by_class.find(cls) == shots_by_class.end()) {
        throw ContractError("build_training_set: synthetic rows for class " +
                            std::to_string(cls) + " which has no shots");
      }
      (void)rows;
    }
  }

  std::size_t total = seen_rows.rows();
  if (strategy == Strategy::Base) {
    if (cfg.resample_multiple == 0) {
      throw ContractError("build_training_set: resample multiple must be at least 1");
    }
    total += shot_rows.rows() * cfg.resample_multiple;
  } else {
    total += shot_rows.rows() + synthetic.size();
  }

  TrainSet out;
  out.x = Matrix(total, dim);
  out.labels.reserve(total);
  std::size_t row = 0;
  auto emit = [&](const double* src, std::uint32_t label) {
    for (std::size_t c = 0; c < dim; ++c) out.x(row, c) = src[c];
    out.labels.push_back(label);
    ++row;
  };

  for (std::size_t i = 0; i < seen_rows.rows(); ++i) {
    emit(seen_rows.data() + i * dim, seen_labels[i]);
  }

  if (strategy == Strategy::Base) {
    // Jitter scale follows the overall spread of the real training rows.
    double sum = 0.0, sq = 0.0;
    std::size_t cnt = 0;
    auto accum = [&](const Matrix& m) {
      for (std::size_t i = 0; i < m.size(); ++i) {
        sum += m.data()[i];
        sq += m.data()[i] * m.data()[i];
      }
      cnt += m.size();
    };
    accum(seen_rows);
    accum(shot_rows);
    const double mean = sum / static_cast<double>(cnt);
    const double var = std::max(0.0, sq / static_cast<double>(cnt) - mean * mean);
    const double jitter_std = cfg.jitter_scale * std::sqrt(var);

    Rng rng(jitter_seed);
    std::vector<double> jittered(dim);
    for (const auto& [cls, rows] : shots_by_class) {
      for (std::size_t i : rows) {
        const double* src = shot_rows.data() + i * dim;
        emit(src, cls);  // first copy stays exact
        for (std::size_t copy = 1; copy < cfg.resample_multiple; ++copy) {
          for (std::size_t c = 0; c < dim; ++c) jittered[c] = src[c] + rng.normal(0.0, jitter_std);
          emit(jittered.data(), cls);
        }
      }
    }
  } else {
    for (const auto& [cls, rows] : shots_by_class) {
      for (std::size_t i : rows) emit(shot_rows.data() + i * dim, cls);
      const auto it = synth_by_class.find(cls);
      if (it != synth_by_class.end()) {
        for (std::size_t i : it->second) emit(synthetic[i].values.data(), cls);
      }
    }
  }
  return out;
}

MlpNet train_classifier(const TrainSet& train, const ClassifierTask& task, const ClfConfig& cfg,
                        std::uint64_t seed) {
  const std::size_t n = train.x.rows();
  if (n == 0 || train.labels.size() != n) {
    throw ContractError("train_classifier: empty or inconsistent training set");
  }
  if (task.label_space.empty()) throw ContractError("train_classifier: empty label space");
  if (!std::is_sorted(task.label_space.begin(), task.label_space.end()) ||
      std::adjacent_find(task.label_space.begin(), task.label_space.end()) !=
          task.label_space.end()) {
    throw ContractError("train_classifier: label space must be sorted and unique");
  }
  if (cfg.epochs == 0 || cfg.batch == 0) {
    throw ConfigError("train_classifier: epochs and batch must be at least 1");
  }
  if (cfg.lr <= 0.0 || cfg.weight_decay < 0.0) {
    throw ConfigError("train_classifier: bad optimizer settings");
  }

  std::vector<int> target(n);
  for (std::size_t i = 0; i < n; ++i) {
    target[i] = static_cast<int>(task.index_of(train.labels[i]));
  }

  const std::size_t dim = train.x.cols();
  const std::size_t k = task.label_space.size();
  Rng init_rng(child_seed(seed, Seed::NetInit));
  MlpNet net = make_mlp({dim, k}, {Act::LeakyRelu, 0.01}, {Act::Identity, 0.01}, init_rng);
  AdamState adam(net.params(), {cfg.lr, cfg.weight_decay, 0.9, 0.999, 1e-8});

  Rng shuffle_rng(child_seed(seed, Seed::ClfTrain));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += cfg.batch) {
      const std::size_t bsize = std::min(cfg.batch, n - start);
      Matrix xb(bsize, dim);
      std::vector<int> yb(bsize);
      for (std::size_t r = 0; r < bsize; ++r) {
        const std::size_t idx = order[start + r];
        for (std::size_t c = 0; c < dim; ++c) xb(r, c) = train.x(idx, c);
        yb[r] = target[idx];
      }

      Tape tape;
      TapedNet clf = lift(tape, net, true);
      Expr logits = net_forward(clf, tape.constant(std::move(xb)));
      // Stable log-sum-exp: subtracting a constant per-row shift leaves the
      // gradient exactly softmax(logits) minus the one-hot target.
      Expr shifted = sub(logits, broadcast_col(row_max_const(logits), k));
      Expr log_z = log_elem(row_sum(exp_elem(shifted)));
      Expr picked = select_cols(shifted, yb);
      Expr loss = mean_all(sub(log_z, picked));
      tape.backward(loss);
      adam.step(net.params(), collect_grads(tape, clf));
    }
  }
  return net;
}

Prediction predict(const MlpNet& net, const ClassifierTask& task, const Matrix& rows) {
  if (task.label_space.size() != net.out_dim()) {
    throw ShapeError("predict: label space does not match classifier width");
  }
  Prediction pred;
  pred.scores = net.forward(rows);
  pred.labels.resize(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < pred.scores.cols(); ++c) {
      if (pred.scores(r, c) > pred.scores(r, best)) best = c;  // ties keep the lowest id
    }
    pred.labels[r] = task.label_space[best];
  }
  return pred;
}

}  // namespace fewgen
