#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "fewgen/classify.hpp"
#include "fewgen/errors.hpp"
#include "fewgen/rng.hpp"
#include "fewgen/tape.hpp"
#include "oracles.hpp"

using namespace fewgen;

namespace {

Matrix rows_from(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

SyntheticSample synth_row(std::uint32_t cls, std::size_t idx, std::vector<double> v) {
  SyntheticSample s;
  s.class_id = cls;
  s.gen_index = idx;
  s.recon_loss = 0.1;
  s.values = std::move(v);
  return s;
}

/// Two linearly separable clusters in 2-D: class `lo_label` near (+1, +1),
/// class `hi_label` near (-1, -1).
TrainSet separable_set(std::uint32_t lo_label, std::uint32_t hi_label, std::size_t per_class,
                       std::uint64_t seed) {
  Rng rng(seed);
  TrainSet t;
  t.x = Matrix(2 * per_class, 2);
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const bool first = i < per_class;
    t.labels.push_back(first ? lo_label : hi_label);
    t.x(i, 0) = (first ? 1.0 : -1.0) + 0.05 * rng.normal();
    t.x(i, 1) = (first ? 1.0 : -1.0) + 0.05 * rng.normal();
  }
  return t;
}

bool nets_equal(const MlpNet& a, const MlpNet& b) {
  if (a.depth() != b.depth()) return false;
  for (std::size_t l = 0; l < a.depth(); ++l) {
    for (std::size_t i = 0; i < a.layers()[l].weight.size(); ++i) {
      if (a.layers()[l].weight.data()[i] != b.layers()[l].weight.data()[i]) return false;
    }
    for (std::size_t i = 0; i < a.layers()[l].bias.size(); ++i) {
      if (a.layers()[l].bias.data()[i] != b.layers()[l].bias.data()[i]) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("strategy names are stable identifiers") {
  CHECK(std::strcmp(strategy_name(Strategy::Base), "base") == 0);
  CHECK(std::strcmp(strategy_name(Strategy::Heuristic), "heuristic") == 0);
  CHECK(std::strcmp(strategy_name(Strategy::Sample), "sample") == 0);
  CHECK(std::strcmp(strategy_name(Strategy::Learned), "learned") == 0);
}

TEST_CASE("task label lookup maps sorted ids to output indices") {
  ClassifierTask task;
  task.label_space = {2, 5, 9};
  CHECK(task.index_of(2) == 0);
  CHECK(task.index_of(5) == 1);
  CHECK(task.index_of(9) == 2);
  CHECK_THROWS_AS((void)task.index_of(3), ContractError);
  CHECK_THROWS_AS((void)task.index_of(10), ContractError);
}

TEST_CASE("training-set assembly: seen rows first, then shots and synthetic per class") {
  const Matrix seen = rows_from({{1, 1}, {2, 2}, {3, 3}});
  const std::vector<std::uint32_t> seen_labels{0, 0, 1};
  const Matrix shots = rows_from({{10, 10}, {20, 20}});
  const std::vector<std::uint32_t> shot_labels{5, 4};  // classes out of order on purpose
  std::vector<SyntheticSample> synth;
  synth.push_back(synth_row(4, 0, {40, 40}));
  synth.push_back(synth_row(5, 0, {50, 50}));
  synth.push_back(synth_row(4, 1, {41, 41}));

  BuildConfig cfg;
  const TrainSet t =
      build_training_set(seen, seen_labels, shots, shot_labels, synth, Strategy::Learned, cfg, 1);

  // 3 seen + class 4 (1 shot + 2 synth) + class 5 (1 shot + 1 synth) = 8 rows.
  REQUIRE(t.x.rows() == 8);
  REQUIRE(t.labels.size() == 8);
  CHECK(t.labels == std::vector<std::uint32_t>{0, 0, 1, 4, 4, 4, 5, 5});
  CHECK(t.x(0, 0) == 1.0);
  CHECK(t.x(3, 0) == 20.0);  // class 4's shot
  CHECK(t.x(4, 0) == 40.0);  // class 4's synthetic rows in draw order
  CHECK(t.x(5, 0) == 41.0);
  CHECK(t.x(6, 0) == 10.0);  // class 5's shot
  CHECK(t.x(7, 0) == 50.0);
}

TEST_CASE("training-set assembly without seen rows covers the few-shot-only task") {
  const Matrix seen(0, 2);
  const Matrix shots = rows_from({{1, 0}, {0, 1}});
  const std::vector<std::uint32_t> shot_labels{3, 8};
  std::vector<SyntheticSample> synth;
  synth.push_back(synth_row(3, 0, {0.9, 0.1}));

  BuildConfig cfg;
  const TrainSet t = build_training_set(seen, {}, shots, shot_labels, synth, Strategy::Heuristic,
                                        cfg, 1);
  REQUIRE(t.x.rows() == 3);
  CHECK(t.labels == std::vector<std::uint32_t>{3, 3, 8});
}

TEST_CASE("no-synthesis baseline resamples each shot to the configured multiple") {
  const Matrix seen = rows_from({{1, 2}, {3, 4}});
  const std::vector<std::uint32_t> seen_labels{0, 1};
  const Matrix shots = rows_from({{5, 6}, {7, 8}});
  const std::vector<std::uint32_t> shot_labels{2, 3};

  BuildConfig cfg;
  cfg.resample_multiple = 3;
  const TrainSet t =
      build_training_set(seen, seen_labels, shots, shot_labels, {}, Strategy::Base, cfg, 9);
  // 2 seen + 2 shots * 3 copies = 8 rows.
  REQUIRE(t.x.rows() == 8);
  CHECK(t.labels == std::vector<std::uint32_t>{0, 1, 2, 2, 2, 3, 3, 3});
  // First copy of each shot is exact.
  CHECK(t.x(2, 0) == 5.0);
  CHECK(t.x(2, 1) == 6.0);
  CHECK(t.x(5, 0) == 7.0);
  // Later copies are jittered, not exact repeats.
  bool jittered = false;
  for (std::size_t r = 3; r < 5; ++r) {
    if (t.x(r, 0) != 5.0 || t.x(r, 1) != 6.0) jittered = true;
  }
  CHECK(jittered);
}

TEST_CASE("no-synthesis baseline with multiple 1 reproduces seen plus shots exactly") {
  const Matrix seen = rows_from({{1, 2}});
  const Matrix shots = rows_from({{5, 6}, {7, 8}});
  BuildConfig cfg;
  cfg.resample_multiple = 1;
  const TrainSet t = build_training_set(seen, {0}, shots, {1, 2}, {}, Strategy::Base, cfg, 3);
  REQUIRE(t.x.rows() == 3);
  CHECK(t.x(1, 0) == 5.0);
  CHECK(t.x(1, 1) == 6.0);
  CHECK(t.x(2, 0) == 7.0);
  CHECK(t.x(2, 1) == 8.0);
}

TEST_CASE("baseline jitter is seed-deterministic and scales with the configured factor") {
  const Matrix seen = rows_from({{0, 0}, {4, 4}});
  const Matrix shots = rows_from({{2, 2}});
  BuildConfig cfg;
  cfg.resample_multiple = 4;

  const TrainSet a = build_training_set(seen, {0, 1}, shots, {2}, {}, Strategy::Base, cfg, 42);
  const TrainSet b = build_training_set(seen, {0, 1}, shots, {2}, {}, Strategy::Base, cfg, 42);
  REQUIRE(a.x.rows() == b.x.rows());
  for (std::size_t i = 0; i < a.x.size(); ++i) CHECK(a.x.data()[i] == b.x.data()[i]);

  const TrainSet c = build_training_set(seen, {0, 1}, shots, {2}, {}, Strategy::Base, cfg, 43);
  bool differs = false;
  for (std::size_t i = 0; i < a.x.size(); ++i) {
    if (a.x.data()[i] != c.x.data()[i]) differs = true;
  }
  CHECK(differs);

  BuildConfig still = cfg;
  still.jitter_scale = 0.0;
  const TrainSet exact = build_training_set(seen, {0, 1}, shots, {2}, {}, Strategy::Base, still, 7);
  for (std::size_t r = 2; r < exact.x.rows(); ++r) {
    CHECK(exact.x(r, 0) == 2.0);
    CHECK(exact.x(r, 1) == 2.0);
  }
}

TEST_CASE("training-set assembly rejects inconsistent shapes and orphan synthetics") {
  const Matrix seen = rows_from({{1, 1}});
  const Matrix shots = rows_from({{2, 2}});
  BuildConfig cfg;
  CHECK_THROWS_AS(
      (void)build_training_set(seen, {0, 1}, shots, {2}, {}, Strategy::Learned, cfg, 1),
      ShapeError);
  CHECK_THROWS_AS((void)build_training_set(seen, {0}, Matrix(0, 2), {}, {}, Strategy::Base, cfg, 1),
                  ContractError);  // no shots at all
  std::vector<SyntheticSample> orphan{synth_row(9, 0, {3, 3})};
  CHECK_THROWS_AS(
      (void)build_training_set(seen, {0}, shots, {2}, orphan, Strategy::Learned, cfg, 1),
      ContractError);
  std::vector<SyntheticSample> bad_width{synth_row(2, 0, {3, 3, 3})};
  CHECK_THROWS_AS(
      (void)build_training_set(seen, {0}, shots, {2}, bad_width, Strategy::Learned, cfg, 1),
      ShapeError);
  BuildConfig zero = cfg;
  zero.resample_multiple = 0;
  CHECK_THROWS_AS((void)build_training_set(seen, {0}, shots, {2}, {}, Strategy::Base, zero, 1),
                  ContractError);
}

TEST_CASE("classifier reaches full training accuracy on separable clusters") {
  const TrainSet train = separable_set(0, 7, 20, 5);
  ClassifierTask task;
  task.label_space = {0, 7};
  ClfConfig cfg;
  cfg.epochs = 60;
  cfg.lr = 0.05;
  const MlpNet net = train_classifier(train, task, cfg, 11);
  REQUIRE(net.depth() == 1);  // single softmax layer
  CHECK(net.out_dim() == 2);

  const Prediction pred = predict(net, task, train.x);
  REQUIRE(pred.labels.size() == train.labels.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.labels.size(); ++i) {
    if (pred.labels[i] == train.labels[i]) ++correct;
  }
  CHECK(correct == pred.labels.size());
  CHECK(pred.scores.rows() == train.x.rows());
  CHECK(pred.scores.cols() == 2);
}

TEST_CASE("single-class task always predicts that class") {
  TrainSet train;
  train.x = rows_from({{0.4, 0.2}, {0.5, 0.1}});
  train.labels = {6, 6};
  ClassifierTask task;
  task.label_space = {6};
  ClfConfig cfg;
  cfg.epochs = 3;
  const MlpNet net = train_classifier(train, task, cfg, 1);
  const Prediction pred = predict(net, task, rows_from({{9.0, -9.0}, {0.0, 0.0}}));
  CHECK(pred.labels == std::vector<std::uint32_t>{6, 6});
}

TEST_CASE("classifier training is seed-deterministic") {
  const TrainSet train = separable_set(1, 2, 8, 3);
  ClassifierTask task;
  task.label_space = {1, 2};
  ClfConfig cfg;
  cfg.epochs = 5;
  const MlpNet a = train_classifier(train, task, cfg, 77);
  const MlpNet b = train_classifier(train, task, cfg, 77);
  CHECK(nets_equal(a, b));
  const MlpNet c = train_classifier(train, task, cfg, 78);
  CHECK_FALSE(nets_equal(a, c));
}

TEST_CASE("classifier rejects labels outside the task space and empty input") {
  TrainSet train;
  train.x = rows_from({{1.0, 0.0}});
  train.labels = {4};
  ClassifierTask task;
  task.label_space = {0, 1};
  ClfConfig cfg;
  CHECK_THROWS_AS((void)train_classifier(train, task, cfg, 1), ContractError);

  TrainSet empty;
  empty.x = Matrix(0, 2);
  ClassifierTask ok;
  ok.label_space = {0};
  CHECK_THROWS_AS((void)train_classifier(empty, ok, cfg, 1), ContractError);

  ClassifierTask unsorted;
  unsorted.label_space = {3, 1};
  train.labels = {1};
  CHECK_THROWS_AS((void)train_classifier(train, unsorted, cfg, 1), ContractError);
}

TEST_CASE("prediction takes the argmax and resolves ties to the lowest class id") {
  // Hand-built single layer: logits = x . w + b.
  MlpNet net;
  Matrix w(3, 2, 0.0);
  w(0, 0) = 1.0;   // class A score = x0
  w(1, 1) = 1.0;   // class B score = x1
  // class C score = 0 always
  net.add_layer({w, Matrix(1, 3, 0.0), {Act::Identity, 0.01}});
  ClassifierTask task;
  task.label_space = {10, 20, 30};

  const Prediction pred = predict(net, task, rows_from({{2.0, 1.0}, {1.0, 3.0}, {-1.0, -2.0}}));
  CHECK(pred.labels == std::vector<std::uint32_t>{10, 20, 30});

  // All-zero logits tie across the three classes: the lowest id wins.
  MlpNet zero;
  zero.add_layer({Matrix(3, 2, 0.0), Matrix(1, 3, 0.0), {Act::Identity, 0.01}});
  const Prediction tie = predict(zero, task, rows_from({{4.0, 4.0}}));
  CHECK(tie.labels == std::vector<std::uint32_t>{10});
}

TEST_CASE("prediction is invariant to a constant logit shift") {
  const TrainSet train = separable_set(0, 1, 10, 9);
  ClassifierTask task;
  task.label_space = {0, 1};
  ClfConfig cfg;
  cfg.epochs = 10;
  MlpNet net = train_classifier(train, task, cfg, 5);
  const Prediction before = predict(net, task, train.x);
  for (std::size_t i = 0; i < net.layers()[0].bias.size(); ++i) {
    net.layers()[0].bias.data()[i] += 100.0;
  }
  const Prediction after = predict(net, task, train.x);
  CHECK(before.labels == after.labels);
}

TEST_CASE("cross-entropy graph: max-shifted formula matches the oracle and survives huge logits") {
  // The same graph shape the trainer uses: shift by the row max (as a
  // constant), exponentiate, normalize, pick the target column.
  auto graph_ce = [](const Matrix& logits, const std::vector<int>& targets) {
    Tape tape;
    Expr lg = tape.param(logits);
    const std::size_t k = logits.cols();
    Expr shifted = sub(lg, broadcast_col(row_max_const(lg), k));
    Expr log_z = log_elem(row_sum(exp_elem(shifted)));
    Expr picked = select_cols(shifted, targets);
    Expr loss = mean_all(sub(log_z, picked));
    return loss.value()(0, 0);
  };

  Rng rng(33);
  for (int trial = 0; trial < 30; ++trial) {
    Matrix logits(2, 4);
    for (std::size_t i = 0; i < logits.size(); ++i) logits.data()[i] = rng.uniform(-3.0, 3.0);
    const std::vector<int> targets{static_cast<int>(rng.below(4)),
                                   static_cast<int>(rng.below(4))};
    double want = 0.0;
    for (int r = 0; r < 2; ++r) {
      oracle::Vec row(4);
      for (int c = 0; c < 4; ++c) row[c] = logits(r, c);
      want += oracle::softmax_ce(row, static_cast<std::size_t>(targets[r]));
    }
    want /= 2.0;
    CHECK(oracle::close_rel(graph_ce(logits, targets), want, 1e-12, 1e-14));
  }

  // Logits of magnitude 1e4 stay finite thanks to the shift.
  Matrix huge(1, 3);
  huge(0, 0) = 10000.0;
  huge(0, 1) = 9999.0;
  huge(0, 2) = -10000.0;
  const double v = graph_ce(huge, {0});
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-9));
}

TEST_CASE("few-shot-only task space excludes seen classes end to end") {
  // Train only on novel labels; predictions must come from that space even for
  // inputs resembling other data.
  TrainSet train;
  train.x = rows_from({{1, 0}, {0, 1}});
  train.labels = {100, 200};
  ClassifierTask task;
  task.mode = TaskMode::Fsl;
  task.label_space = {100, 200};
  ClfConfig cfg;
  cfg.epochs = 20;
  cfg.lr = 0.05;
  const MlpNet net = train_classifier(train, task, cfg, 2);
  const Prediction pred = predict(net, task, rows_from({{5, 5}, {-3, 2}, {0, 0}}));
  for (std::uint32_t lbl : pred.labels) {
    CHECK((lbl == 100 || lbl == 200));
  }
}
