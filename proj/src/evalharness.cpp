#include "fewgen/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "fewgen/errors.hpp"
#include "fewgen/synth.hpp"

#include "json.hpp"

namespace fewgen {

double harmonic_mean(double s, double n) {
  if (!(s >= 0.0 && s <= 100.0) || !(n >= 0.0 && n <= 100.0)) {
    throw ContractError("harmonic_mean: accuracies must lie in [0, 100]");
  }
  if (s + n == 0.0) return 0.0;
  return 2.0 * s * n / (s + n);
}

void PipelineConfig::validate() const {
  if (!(seen_holdout > 0.0 && seen_holdout < 1.0)) {
    throw ConfigError("seen holdout fraction must lie in (0, 1)");
  }
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw ConfigError("keep fraction must lie in (0, 1]");
  }
  gan.validate();
}

std::vector<std::uint64_t> run_seeds(std::uint64_t master, std::size_t runs) {
  std::vector<std::uint64_t> seeds(runs);
  for (std::size_t i = 0; i < runs; ++i) seeds[i] = child_seed(master, Seed::Run, i);
  return seeds;
}

namespace {

struct Plan {
  std::vector<std::uint32_t> seen_ids, novel_ids;
  std::map<std::uint32_t, std::vector<std::size_t>> seen_train, seen_test;
  std::map<std::uint32_t, std::vector<std::size_t>> novel_shots, novel_test;
};

Plan make_plan(const Dataset& data, std::size_t k, const PipelineConfig& cfg,
               std::uint64_t run_seed) {
  const auto by_class = indices_by_class(data);
  const std::size_t c_total = by_class.size();
  if (c_total < 2) throw ContractError("evaluation needs at least two classes");
  const std::size_t n_seen = cfg.n_seen > 0 ? cfg.n_seen : (c_total + 1) / 2;
  const std::size_t n_novel = cfg.n_novel > 0 ? cfg.n_novel : c_total - n_seen;
  if (n_seen == 0 || n_novel == 0) {
    throw ContractError("evaluation needs at least one seen and one novel class");
  }
  if (n_seen + n_novel > c_total) {
    throw ContractError("seen + novel class counts exceed the dataset");
  }

  const SplitResult split =
      split_classes(c_total, n_seen, n_novel, child_seed(run_seed, Seed::ClassSplit));
  Plan plan;
  plan.seen_ids = split.seen;
  plan.novel_ids = split.novel;

  for (std::uint32_t c : split.seen) {
    std::vector<std::size_t> order = by_class[c];
    const std::size_t n_c = order.size();
    if (n_c < 2) {
      throw ContractError("seen class " + std::to_string(c) + " has fewer than two records");
    }
    std::size_t n_test = static_cast<std::size_t>(std::llround(cfg.seen_holdout * n_c));
    n_test = std::min(std::max<std::size_t>(n_test, 1), n_c - 1);
    Rng rng(child_seed(run_seed, Seed::SeenHoldout, c));
    rng.shuffle(order);
    std::vector<std::size_t> test(order.begin(), order.begin() + n_test);
    std::vector<std::size_t> train(order.begin() + n_test, order.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());
    plan.seen_test[c] = std::move(test);
    plan.seen_train[c] = std::move(train);
  }

  for (std::uint32_t c : split.novel) {
    const std::vector<std::size_t>& idx = by_class[c];
    const ShotSplit ss = sample_k_shots(idx.size(), k, child_seed(run_seed, Seed::ShotSampling, c));
    std::vector<std::size_t> shots, held;
    shots.reserve(ss.shots.size());
    held.reserve(ss.heldout.size());
    for (std::size_t p : ss.shots) shots.push_back(idx[p]);
    for (std::size_t p : ss.heldout) held.push_back(idx[p]);
    plan.novel_shots[c] = std::move(shots);
    plan.novel_test[c] = std::move(held);
  }
  return plan;
}

std::vector<double> as_double(const std::vector<float>& v) {
  return std::vector<double>(v.begin(), v.end());
}

std::vector<const FeatureRecord*> records_at(const Dataset& data,
                                             const std::vector<std::size_t>& idx) {
  std::vector<const FeatureRecord*> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(&data.records[i]);
  return out;
}

RunResult single_run(const Dataset& data, std::size_t k, Strategy strategy, TaskMode mode,
                     std::uint64_t run_seed, const PipelineConfig& cfg) {
  const Plan plan = make_plan(data, k, cfg, run_seed);
  const std::size_t d_x = data.dim;
  AggregationConfig agg = cfg.agg;
  agg.validate(d_x);
  const std::size_t d_phi = agg.output_dim(d_x);

  // Seen-class training rows, in ascending class order.
  std::vector<const FeatureRecord*> seen_train_recs;
  std::vector<std::uint32_t> seen_train_labels;
  std::vector<std::size_t> seen_train_counts;
  for (const auto& [c, idx] : plan.seen_train) {
    for (std::size_t i : idx) {
      seen_train_recs.push_back(&data.records[i]);
      seen_train_labels.push_back(c);
    }
    seen_train_counts.push_back(idx.size());
  }

  RunResult result;
  result.seed = run_seed;
  result.has_synth = strategy != Strategy::Base;

  std::vector<SyntheticSample> synthetic;
  if (result.has_synth) {
    // Class-level aggregation targets over the seen training rows.
    std::map<std::uint32_t, Prototype> seen_targets;
    for (const auto& [c, idx] : plan.seen_train) {
      seen_targets[c] = aggregate_target(records_at(data, idx), agg, c);
    }

    // Per-record conditioning for adversarial training.
    std::vector<std::vector<double>> conditioning;
    conditioning.reserve(seen_train_recs.size());
    for (std::size_t i = 0; i < seen_train_recs.size(); ++i) {
      if (strategy == Strategy::Sample) {
        conditioning.push_back(pool_vector(as_double(seen_train_recs[i]->values), agg));
      } else {
        conditioning.push_back(seen_targets.at(seen_train_labels[i]).values);
      }
    }

    MlpNet proto_net;
    if (strategy == Strategy::Learned) {
      std::vector<std::vector<std::size_t>> class_indices(data.class_count());
      for (const auto& [c, idx] : plan.seen_train) class_indices[c] = idx;
      proto_net = train_cptn(data, class_indices, agg, cfg.cptn,
                             child_seed(run_seed, Seed::CptnTrain));
    }

    const std::uint64_t gan_seed = child_seed(run_seed, Seed::GanTrain);
    GanTriple triple = make_gan(d_x, d_phi, cfg.gan, gan_seed);
    train_cgan(triple, to_matrix(seen_train_recs, d_x), seen_train_labels, conditioning, cfg.gan,
               gan_seed, nullptr);

    // Novel-class conditioning, one list per class in ascending class order.
    std::vector<std::vector<Prototype>> class_cond;
    std::vector<Matrix> class_test_rows;
    for (std::uint32_t c : plan.novel_ids) {
      const auto shots = records_at(data, plan.novel_shots.at(c));
      std::vector<Prototype> cond;
      if (strategy == Strategy::Learned) {
        cond.push_back(infer_prototype(proto_net, shots, c));
      } else if (strategy == Strategy::Heuristic) {
        cond.push_back(aggregate_target(shots, agg, c));
      } else {  // Strategy::Sample
        for (const FeatureRecord* shot : shots) {
          cond.push_back(Prototype{c, pool_vector(as_double(shot->values), agg)});
        }
      }
      class_cond.push_back(std::move(cond));
      class_test_rows.push_back(to_matrix(records_at(data, plan.novel_test.at(c)), d_x));
    }

    const std::size_t count = default_count(seen_train_counts);
    for (std::size_t i = 0; i < plan.novel_ids.size(); ++i) {
      const std::uint32_t c = plan.novel_ids[i];
      std::vector<SyntheticSample> samples =
          synthesize_class(triple, class_cond[i], count, child_seed(run_seed, Seed::Synthesis, c));
      if (cfg.pruning) samples = prune(std::move(samples), cfg.keep_fraction);
      for (SyntheticSample& s : samples) synthetic.push_back(std::move(s));
    }

    result.synth_quality = synth_quality(triple, class_cond, class_test_rows, count,
                                         child_seed(run_seed, Seed::Quality));
  }

  // Novel shots, in ascending class order.
  std::vector<const FeatureRecord*> shot_recs;
  std::vector<std::uint32_t> shot_labels;
  for (const auto& [c, idx] : plan.novel_shots) {
    for (std::size_t i : idx) {
      shot_recs.push_back(&data.records[i]);
      shot_labels.push_back(c);
    }
  }

  const bool joint = mode == TaskMode::Gfsl;
  Matrix seen_x = joint ? to_matrix(seen_train_recs, d_x) : Matrix(0, d_x);
  std::vector<std::uint32_t> seen_labels_used = joint ? seen_train_labels
                                                      : std::vector<std::uint32_t>{};
  const TrainSet train =
      build_training_set(seen_x, seen_labels_used, to_matrix(shot_recs, d_x), shot_labels,
                         synthetic, strategy, cfg.build, child_seed(run_seed, Seed::Jitter));

  ClassifierTask task;
  task.mode = mode;
  if (joint) {
    task.label_space = plan.seen_ids;
    task.label_space.insert(task.label_space.end(), plan.novel_ids.begin(), plan.novel_ids.end());
    std::sort(task.label_space.begin(), task.label_space.end());
  } else {
    task.label_space = plan.novel_ids;
  }

  const MlpNet net =
      train_classifier(train, task, cfg.clf, child_seed(run_seed, Seed::ClfTrain));

  // Test pool: held-out seen rows (joint mode only) plus held-out novel rows.
  std::vector<const FeatureRecord*> test_recs;
  std::vector<std::uint32_t> test_labels;
  std::vector<bool> test_is_novel;
  if (joint) {
    for (const auto& [c, idx] : plan.seen_test) {
      for (std::size_t i : idx) {
        test_recs.push_back(&data.records[i]);
        test_labels.push_back(c);
        test_is_novel.push_back(false);
      }
    }
  }
  for (const auto& [c, idx] : plan.novel_test) {
    for (std::size_t i : idx) {
      test_recs.push_back(&data.records[i]);
      test_labels.push_back(c);
      test_is_novel.push_back(true);
    }
  }

  const Prediction pred = predict(net, task, to_matrix(test_recs, d_x));
  std::size_t seen_hit = 0, seen_total = 0, novel_hit = 0, novel_total = 0;
  std::map<std::uint32_t, std::pair<std::size_t, std::size_t>> recall;  // hit, total
  for (std::uint32_t c : plan.novel_ids) recall[c] = {0, 0};
  for (std::size_t i = 0; i < test_recs.size(); ++i) {
    const bool hit = pred.labels[i] == test_labels[i];
    if (test_is_novel[i]) {
      ++novel_total;
      novel_hit += hit ? 1 : 0;
      auto& r = recall[test_labels[i]];
      ++r.second;
      r.first += hit ? 1 : 0;
    } else {
      ++seen_total;
      seen_hit += hit ? 1 : 0;
    }
  }
  result.novel_acc = 100.0 * static_cast<double>(novel_hit) / static_cast<double>(novel_total);
  if (joint) {
    result.seen_acc = 100.0 * static_cast<double>(seen_hit) / static_cast<double>(seen_total);
    result.harmonic = harmonic_mean(result.seen_acc, result.novel_acc);
  }
  for (const auto& [c, counts] : recall) {
    result.novel_recall.emplace_back(
        c, 100.0 * static_cast<double>(counts.first) / static_cast<double>(counts.second));
  }
  return result;
}

Aggregate aggregate_sorted(std::vector<double> values) {
  Aggregate a;
  if (values.empty()) return a;
  // Sorting first makes the result bit-for-bit independent of run order.
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return a;
}

RunReport run_all(const Dataset& data, std::size_t k, Strategy strategy, TaskMode mode,
                  const std::vector<std::uint64_t>& seeds, const PipelineConfig& cfg) {
  cfg.validate();
  if (seeds.empty()) throw ContractError("evaluation needs at least one run seed");
  if (data.records.empty() || data.dim == 0) throw ContractError("evaluation on an empty dataset");

  RunReport report;
  report.mode = mode;
  report.strategy = strategy;
  report.k = k;
  report.runs.resize(seeds.size());

  std::size_t jobs = cfg.jobs > 0 ? cfg.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, seeds.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      report.runs[i] = single_run(data, k, strategy, mode, seeds[i], cfg);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= seeds.size()) return;
          try {
            report.runs[i] = single_run(data, k, strategy, mode, seeds[i], cfg);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            return;
          }
        }
      });
    }
    for (std::thread& t : workers) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  std::vector<double> seen, novel, harm, quality;
  for (const RunResult& r : report.runs) {
    seen.push_back(r.seen_acc);
    novel.push_back(r.novel_acc);
    harm.push_back(r.harmonic);
    if (r.has_synth) quality.push_back(r.synth_quality);
  }
  report.seen = aggregate_sorted(std::move(seen));
  report.novel = aggregate_sorted(std::move(novel));
  report.harmonic = aggregate_sorted(std::move(harm));
  report.quality = aggregate_sorted(std::move(quality));
  return report;
}

}  // namespace

RunReport run_gfsl(const Dataset& data, std::size_t k, Strategy strategy,
                   const std::vector<std::uint64_t>& seeds, const PipelineConfig& cfg) {
  return run_all(data, k, strategy, TaskMode::Gfsl, seeds, cfg);
}

RunReport run_fsl(const Dataset& data, std::size_t k, Strategy strategy,
                  const std::vector<std::uint64_t>& seeds, const PipelineConfig& cfg) {
  return run_all(data, k, strategy, TaskMode::Fsl, seeds, cfg);
}

double synth_quality(const GanTriple& triple,
                     const std::vector<std::vector<Prototype>>& class_conditioning,
                     const std::vector<Matrix>& class_test_rows, std::size_t count,
                     std::uint64_t seed) {
  if (class_conditioning.empty() || class_conditioning.size() != class_test_rows.size()) {
    throw ContractError("synth_quality: conditioning and test pools disagree");
  }
  if (count == 0) throw ContractError("synth_quality: zero draw count");

  double acc = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < class_conditioning.size(); ++i) {
    const std::vector<Prototype>& cond = class_conditioning[i];
    if (cond.empty()) throw ContractError("synth_quality: class without conditioning");
    const Matrix& test = class_test_rows[i];
    if (test.rows() == 0) {
      std::fprintf(stderr, "warning: quality probe skipping class %zu (no held-out rows)\n", i);
      continue;
    }
    if (test.cols() != triple.d_x) {
      throw ContractError("synth_quality: held-out rows have the wrong feature dim");
    }

    Rng rng(child_seed(seed, Seed::Quality, i));
    Matrix input(count, triple.d_phi + triple.d_z);
    for (std::size_t j = 0; j < count; ++j) {
      const std::vector<double>& p = cond[j % cond.size()].values;
      if (p.size() != triple.d_phi) throw ShapeError("synth_quality: prototype dim mismatch");
      for (std::size_t c = 0; c < triple.d_phi; ++c) input(j, c) = p[c];
      for (std::size_t c = 0; c < triple.d_z; ++c) input(j, triple.d_phi + c) = rng.normal();
    }
    const Matrix feat = triple.generator.forward(input);

    std::vector<double> mean_synth(triple.d_x, 0.0), mean_real(triple.d_x, 0.0);
    for (std::size_t r = 0; r < feat.rows(); ++r) {
      for (std::size_t c = 0; c < triple.d_x; ++c) mean_synth[c] += feat(r, c);
    }
    for (double& v : mean_synth) v /= static_cast<double>(feat.rows());
    for (std::size_t r = 0; r < test.rows(); ++r) {
      for (std::size_t c = 0; c < triple.d_x; ++c) mean_real[c] += test(r, c);
    }
    for (double& v : mean_real) v /= static_cast<double>(test.rows());

    double dot = 0.0, ns = 0.0, nr = 0.0;
    for (std::size_t c = 0; c < triple.d_x; ++c) {
      dot += mean_synth[c] * mean_real[c];
      ns += mean_synth[c] * mean_synth[c];
      nr += mean_real[c] * mean_real[c];
    }
    acc += 1.0 - dot / (std::max(std::sqrt(ns), 1e-12) * std::max(std::sqrt(nr), 1e-12));
    ++used;
  }
  if (used == 0) throw ContractError("synth_quality: every class pool is empty");
  return acc / static_cast<double>(used);
}

std::map<std::uint32_t, double> per_class_accuracy(const std::vector<RunResult>& runs) {
  std::map<std::uint32_t, std::pair<double, std::size_t>> acc;
  for (const RunResult& r : runs) {
    for (const auto& [c, v] : r.novel_recall) {
      acc[c].first += v;
      acc[c].second += 1;
    }
  }
  std::map<std::uint32_t, double> out;
  for (const auto& [c, sv] : acc) out[c] = sv.first / static_cast<double>(sv.second);
  return out;
}

// --- reports -----------------------------------------------------------------

namespace {

const char* mode_name(TaskMode m) { return m == TaskMode::Gfsl ? "gfsl" : "fsl"; }

TaskMode mode_from_name(const std::string& s) {
  if (s == "gfsl") return TaskMode::Gfsl;
  if (s == "fsl") return TaskMode::Fsl;
  throw IoError("report: unknown mode '" + s + "'");
}

Strategy strategy_from_name(const std::string& s) {
  for (Strategy st : {Strategy::Base, Strategy::Heuristic, Strategy::Sample, Strategy::Learned}) {
    if (s == strategy_name(st)) return st;
  }
  throw IoError("report: unknown strategy '" + s + "'");
}

nlohmann::json aggregate_json(const Aggregate& a) {
  return {{"mean", a.mean}, {"stddev", a.stddev}};
}

Aggregate aggregate_from_json(const nlohmann::json& j) {
  Aggregate a;
  a.mean = j.at("mean").get<double>();
  a.stddev = j.at("stddev").get<double>();
  return a;
}

nlohmann::json report_json(const RunReport& r) {
  nlohmann::json j;
  j["mode"] = mode_name(r.mode);
  j["strategy"] = strategy_name(r.strategy);
  j["k"] = r.k;
  j["config"] = r.config_echo;
  j["aggregate"] = {{"seen", aggregate_json(r.seen)},
                    {"novel", aggregate_json(r.novel)},
                    {"harmonic", aggregate_json(r.harmonic)},
                    {"synth_quality", aggregate_json(r.quality)}};
  nlohmann::json runs = nlohmann::json::array();
  for (const RunResult& run : r.runs) {
    nlohmann::json jr;
    jr["seed"] = std::to_string(run.seed);
    jr["seen"] = run.seen_acc;
    jr["novel"] = run.novel_acc;
    jr["harmonic"] = run.harmonic;
    jr["has_synth"] = run.has_synth;
    jr["synth_quality"] = run.synth_quality;
    nlohmann::json rec = nlohmann::json::array();
    for (const auto& [c, v] : run.novel_recall) rec.push_back({{"class", c}, {"recall", v}});
    jr["novel_recall"] = std::move(rec);
    runs.push_back(std::move(jr));
  }
  j["runs"] = std::move(runs);
  return j;
}

RunReport report_from_json_obj(const nlohmann::json& j) {
  RunReport r;
  r.mode = mode_from_name(j.at("mode").get<std::string>());
  r.strategy = strategy_from_name(j.at("strategy").get<std::string>());
  r.k = j.at("k").get<std::size_t>();
  if (j.contains("config")) {
    r.config_echo = j.at("config").get<std::map<std::string, std::string>>();
  }
  const nlohmann::json& agg = j.at("aggregate");
  r.seen = aggregate_from_json(agg.at("seen"));
  r.novel = aggregate_from_json(agg.at("novel"));
  r.harmonic = aggregate_from_json(agg.at("harmonic"));
  r.quality = aggregate_from_json(agg.at("synth_quality"));
  for (const nlohmann::json& jr : j.at("runs")) {
    RunResult run;
    run.seed = std::stoull(jr.at("seed").get<std::string>());
    run.seen_acc = jr.at("seen").get<double>();
    run.novel_acc = jr.at("novel").get<double>();
    run.harmonic = jr.at("harmonic").get<double>();
    run.has_synth = jr.at("has_synth").get<bool>();
    run.synth_quality = jr.at("synth_quality").get<double>();
    for (const nlohmann::json& rec : jr.at("novel_recall")) {
      run.novel_recall.emplace_back(rec.at("class").get<std::uint32_t>(),
                                    rec.at("recall").get<double>());
    }
    r.runs.push_back(std::move(run));
  }
  return r;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

std::string RunReport::to_json() const { return report_json(*this).dump(2); }

RunReport RunReport::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw IoError("report: malformed JSON");
  try {
    return report_from_json_obj(j);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("report: ") + e.what());
  }
}

std::string format_table(const std::vector<RunReport>& reports) {
  std::ostringstream out;
  for (TaskMode mode : {TaskMode::Gfsl, TaskMode::Fsl}) {
    std::vector<const RunReport*> block;
    for (const RunReport& r : reports) {
      if (r.mode == mode) block.push_back(&r);
    }
    if (block.empty()) continue;

    std::vector<std::vector<std::string>> rows;
    rows.push_back({"strategy", "k", "seen", "novel", "harmonic", "synth_dist"});
    for (const RunReport* r : block) {
      auto cell = [&](const Aggregate& a, const char* spec) {
        return fmt(spec, a.mean) + " +- " + fmt(spec, a.stddev);
      };
      const bool has_quality = r->strategy != Strategy::Base;
      rows.push_back({strategy_name(r->strategy), std::to_string(r->k),
                      mode == TaskMode::Gfsl ? cell(r->seen, "%.2f") : std::string("-"),
                      cell(r->novel, "%.2f"),
                      mode == TaskMode::Gfsl ? cell(r->harmonic, "%.2f") : std::string("-"),
                      has_quality ? cell(r->quality, "%.4f") : std::string("-")});
    }

    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    out << "mode: " << mode_name(mode) << " (" << block.front()->runs.size() << " runs)\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t c = 0; c < rows[i].size(); ++c) {
        out << rows[i][c] << std::string(width[c] - rows[i][c].size(), ' ');
        out << (c + 1 < rows[i].size() ? "  " : "");
      }
      out << '\n';
      if (i == 0) {
        std::size_t total = 0;
        for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c + 1 < width.size() ? 2 : 0);
        out << std::string(total, '-') << '\n';
      }
    }
    out << '\n';
  }
  return out.str();
}

std::string format_csv(const std::vector<RunReport>& reports) {
  std::ostringstream out;
  out << "mode,strategy,k,run,seed,seen,novel,harmonic,synth_quality\n";
  for (const RunReport& r : reports) {
    for (std::size_t i = 0; i < r.runs.size(); ++i) {
      const RunResult& run = r.runs[i];
      out << mode_name(r.mode) << ',' << strategy_name(r.strategy) << ',' << r.k << ',' << i << ','
          << run.seed << ',' << fmt("%.9g", run.seen_acc) << ',' << fmt("%.9g", run.novel_acc)
          << ',' << fmt("%.9g", run.harmonic) << ','
          << (run.has_synth ? fmt("%.9g", run.synth_quality) : std::string()) << '\n';
    }
  }
  return out.str();
}

void write_reports(const std::string& dir, const std::vector<RunReport>& reports) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());

  auto write_file = [&](const std::string& name, const std::string& content) {
    const std::string path = dir + "/" + name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw IoError("write to '" + path + "' failed");
  };

  write_file("report.csv", format_csv(reports));
  nlohmann::json all = nlohmann::json::array();
  for (const RunReport& r : reports) all.push_back(report_json(r));
  write_file("runs.json", all.dump(2) + "\n");
  write_file("table.txt", format_table(reports));
}

}  // namespace fewgen
