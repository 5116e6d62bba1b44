// fewgen: feature synthesis for few-shot classification.
//
// Single binary with subcommands:
//   gen-benchmark  write a synthetic Gaussian-cluster feature file
//   train-cptn     train the prototype network on a feature file
//   train-cgan     train the conditional generator bundle on a feature file
//   synth          generate synthetic features from a trained bundle
//   run            full evaluation protocol (repeated randomized splits)
//   ablate         pooling x pruning sweep with paired seeds
//   inspect        describe a feature file, network blob, bundle, or report
//
// Configuration precedence: built-in defaults < --config file < flags.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fewgen/cgan.hpp"
#include "fewgen/classify.hpp"
#include "fewgen/config.hpp"
#include "fewgen/cptn.hpp"
#include "fewgen/data.hpp"
#include "fewgen/errors.hpp"
#include "fewgen/evalharness.hpp"
#include "fewgen/serialize.hpp"
#include "fewgen/synth.hpp"

namespace {

using fewgen::Config;

std::string config_footer() {
  const Config defaults;
  const auto echo = defaults.echo();
  std::string out =
      "Configuration keys (any key is settable with --set key=value or from a\n"
      "--config file of key=value lines; later sources win):\n";
  std::size_t width = 0;
  for (const auto& [name, help] : fewgen::config_key_help()) {
    (void)help;
    width = std::max(width, name.size());
  }
  for (const auto& [name, help] : fewgen::config_key_help()) {
    out += "  " + name + std::string(width - name.size(), ' ') + "  " + help +
           " (default " + echo.at(name) + ")\n";
  }
  return out;
}

/// Deferred key=value assignments: config file first, then --set pairs, then
/// dedicated flags, so that flags always win.
struct ConfigCli {
  std::string config_path;
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, std::string>> flag_values;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key=value configuration file");
    cmd->add_option("--set", sets, "set one configuration key (key=value, repeatable)");
    cmd->footer(config_footer());
  }

  /// Registers --<flag> as an alias for configuration key `key`.
  void alias(CLI::App* cmd, const std::string& flag, const std::string& key,
             const std::string& help) {
    auto holder = std::make_shared<std::string>();
    cmd->add_option_function<std::string>(
           flag,
           [this, key, holder](const std::string& v) {
             *holder = v;
             flag_values.emplace_back(key, v);
           },
           help + " (configuration key '" + key + "')")
        ->type_name("VALUE");
  }

  Config resolve() const {
    Config cfg;
    if (!config_path.empty()) fewgen::load_config_file(config_path, cfg);
    for (const std::string& s : sets) {
      const std::size_t eq = s.find('=');
      if (eq == std::string::npos) {
        throw fewgen::ConfigError("--set expects key=value, got '" + s + "'");
      }
      cfg.apply(s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [key, value] : flag_values) cfg.apply(key, value);
    return cfg;
  }
};

void announce(const std::string& path) { std::cout << "wrote " << path << "\n"; }

bool wants_csv(const std::string& path, const std::string& format) {
  if (format == "csv") return true;
  if (format == "bin") return false;
  return path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
}

void save_features_auto(const std::string& path, const std::vector<fewgen::FeatureRecord>& records,
                        std::size_t dim, const std::string& format) {
  if (wants_csv(path, format)) {
    fewgen::save_features_csv(path, records, dim);
  } else {
    fewgen::save_features_binary(path, records, dim);
  }
}

fewgen::AggregationConfig agg_of(const Config& cfg) {
  return cfg.pipeline().agg;  // validated jointly with everything else
}

// --- subcommand bodies -------------------------------------------------------

int cmd_gen_benchmark(const ConfigCli& cli, const std::string& out, const std::string& format) {
  const Config cfg = cli.resolve();
  fewgen::BenchmarkSpec spec;
  spec.classes = cfg.bench_classes;
  spec.dim = cfg.bench_dim;
  spec.per_class = cfg.bench_per_class;
  spec.mean_scale = cfg.bench_mean_scale;
  spec.within_std = cfg.bench_std;
  spec.seed = cfg.seed;
  const fewgen::Dataset ds = fewgen::generate_benchmark(spec);
  save_features_auto(out, ds.records, ds.dim, format);
  std::cout << "benchmark: " << ds.records.size() << " records, " << ds.class_count()
            << " classes, dim " << ds.dim << "\n";
  announce(out);
  return 0;
}

int cmd_train_cptn(const ConfigCli& cli, const std::string& input, const std::string& out) {
  const Config cfg = cli.resolve();
  const fewgen::Dataset ds = fewgen::load_features(input);
  const fewgen::PipelineConfig pipe = cfg.pipeline();
  fewgen::CptnTrainLog log;
  const fewgen::MlpNet net =
      fewgen::train_cptn(ds, fewgen::indices_by_class(ds), pipe.agg, pipe.cptn,
                         fewgen::child_seed(cfg.seed, fewgen::Seed::CptnTrain), &log);
  fewgen::save_net(out, net);
  std::cout << "prototype net: " << ds.class_count() << " classes, " << net.in_dim() << " -> "
            << net.out_dim() << ", final epoch loss " << log.epoch_loss.back() << "\n";
  announce(out);
  return 0;
}

nlohmann::json bundle_manifest(const Config& cfg, const fewgen::GanTriple& triple,
                               const std::string& input, std::size_t records) {
  nlohmann::json m;
  m["kind"] = "feature-synthesis bundle";
  m["dims"] = {{"d_x", triple.d_x}, {"d_phi", triple.d_phi}, {"d_z", triple.d_z}};
  m["trained_on"] = {{"path", input}, {"records", records}};
  m["config"] = cfg.echo();
  return m;
}

int cmd_train_cgan(const ConfigCli& cli, const std::string& input, const std::string& out) {
  const Config cfg = cli.resolve();
  const fewgen::Dataset ds = fewgen::load_features(input);
  const fewgen::PipelineConfig pipe = cfg.pipeline();
  fewgen::AggregationConfig agg = pipe.agg;
  agg.validate(ds.dim);

  const auto by_class = fewgen::indices_by_class(ds);
  std::vector<fewgen::Prototype> targets;
  for (std::uint32_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].empty()) continue;
    std::vector<const fewgen::FeatureRecord*> members;
    for (std::size_t i : by_class[c]) members.push_back(&ds.records[i]);
    targets.push_back(fewgen::aggregate_target(members, agg, c));
  }

  std::vector<std::uint32_t> labels;
  labels.reserve(ds.records.size());
  for (const auto& r : ds.records) labels.push_back(r.label);

  const std::uint64_t gan_seed = fewgen::child_seed(cfg.seed, fewgen::Seed::GanTrain);
  fewgen::GanTriple triple =
      fewgen::make_gan(ds.dim, agg.output_dim(ds.dim), pipe.gan, gan_seed);
  fewgen::GanTrainLog log;
  fewgen::train_cgan(triple, fewgen::to_matrix(ds.records, ds.dim), labels, targets, pipe.gan,
                     gan_seed, &log);

  fewgen::save_gan(out, triple, bundle_manifest(cfg, triple, input, ds.records.size()).dump(2));
  std::cout << "bundle: d_x " << triple.d_x << ", d_phi " << triple.d_phi << ", d_z "
            << triple.d_z << ", final critic loss " << log.critic_loss.back()
            << ", final generator loss " << log.gen_loss.back() << "\n";
  announce(out);
  return 0;
}

int cmd_synth(const ConfigCli& cli, const std::string& gan_path, const std::string& shots_path,
              const std::string& cptn_path, const std::string& strategy_name_in,
              std::size_t count, const std::string& out, const std::string& format) {
  const Config cfg = cli.resolve();
  const fewgen::GanTriple triple = fewgen::load_gan(gan_path);
  const fewgen::Dataset shots = fewgen::load_features(shots_path);
  if (shots.dim != triple.d_x) {
    throw fewgen::ContractError("shot file dim " + std::to_string(shots.dim) +
                                " does not match the bundle's " + std::to_string(triple.d_x));
  }
  fewgen::AggregationConfig agg = agg_of(cfg);
  agg.validate(shots.dim);
  if (agg.output_dim(shots.dim) != triple.d_phi) {
    throw fewgen::ContractError("aggregation output dim " +
                                std::to_string(agg.output_dim(shots.dim)) +
                                " does not match the bundle's " + std::to_string(triple.d_phi));
  }

  fewgen::Strategy strat;
  if (strategy_name_in == "learned") {
    strat = fewgen::Strategy::Learned;
  } else if (strategy_name_in == "heuristic") {
    strat = fewgen::Strategy::Heuristic;
  } else if (strategy_name_in == "sample") {
    strat = fewgen::Strategy::Sample;
  } else {
    throw fewgen::ConfigError("synth: strategy must be learned, heuristic, or sample");
  }
  fewgen::MlpNet proto_net;
  if (strat == fewgen::Strategy::Learned) {
    if (cptn_path.empty()) {
      throw fewgen::ConfigError("synth: --cptn NET is required for the learned strategy");
    }
    proto_net = fewgen::load_net(cptn_path);
  }

  const auto by_class = fewgen::indices_by_class(shots);
  std::size_t largest = 0;
  for (const auto& idx : by_class) largest = std::max(largest, idx.size());
  const std::size_t draw = count > 0 ? count : 2 * largest;

  std::vector<fewgen::FeatureRecord> out_records;
  std::size_t kept_total = 0;
  for (std::uint32_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].empty()) continue;
    std::vector<const fewgen::FeatureRecord*> members;
    for (std::size_t i : by_class[c]) members.push_back(&shots.records[i]);

    std::vector<fewgen::Prototype> cond;
    if (strat == fewgen::Strategy::Learned) {
      cond.push_back(fewgen::infer_prototype(proto_net, members, c));
    } else if (strat == fewgen::Strategy::Heuristic) {
      cond.push_back(fewgen::aggregate_target(members, agg, c));
    } else {
      for (const fewgen::FeatureRecord* m : members) {
        cond.push_back(fewgen::Prototype{
            c, fewgen::pool_vector(std::vector<double>(m->values.begin(), m->values.end()), agg)});
      }
    }

    std::vector<fewgen::SyntheticSample> samples = fewgen::synthesize_class(
        triple, cond, draw, fewgen::child_seed(cfg.seed, fewgen::Seed::Synthesis, c));
    if (cfg.pruning == "on") samples = fewgen::prune(std::move(samples), cfg.keep_fraction);
    kept_total += samples.size();
    for (const fewgen::SyntheticSample& s : samples) {
      fewgen::FeatureRecord rec;
      rec.label = shots.original_labels[c];
      rec.values.assign(s.values.begin(), s.values.end());
      out_records.push_back(std::move(rec));
    }
  }

  save_features_auto(out, out_records, shots.dim, format);
  announce(out);

  nlohmann::json side;
  side["synthetic"] = true;
  side["source"] = {{"bundle", gan_path}, {"shots", shots_path}};
  side["strategy"] = strategy_name_in;
  side["draws_per_class"] = draw;
  side["kept_records"] = kept_total;
  side["config"] = cfg.echo();
  const std::string side_path = out + ".json";
  std::ofstream side_out(side_path, std::ios::binary);
  if (!side_out) throw fewgen::IoError("cannot open '" + side_path + "' for writing");
  side_out << side.dump(2) << "\n";
  announce(side_path);
  std::cout << "synthesized " << kept_total << " records\n";
  return 0;
}

std::string resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("FEWGEN_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return "out";
}

int cmd_run(const ConfigCli& cli, const std::string& input, const std::string& out_dir_flag) {
  const Config cfg = cli.resolve();
  const fewgen::Dataset ds = fewgen::load_features(input);
  const fewgen::PipelineConfig pipe = cfg.pipeline();
  const auto seeds = fewgen::run_seeds(cfg.seed, cfg.runs);
  auto echo = cfg.echo();
  echo["input"] = input;

  const std::string out_dir = resolve_out_dir(out_dir_flag);
  std::size_t requested = cfg.mode_list().size() * cfg.strategy_list().size() *
                          cfg.k_list().size();
  std::vector<fewgen::RunReport> reports;
  try {
    for (fewgen::TaskMode mode : cfg.mode_list()) {
      for (fewgen::Strategy strat : cfg.strategy_list()) {
        for (std::size_t k : cfg.k_list()) {
          fewgen::RunReport r = mode == fewgen::TaskMode::Gfsl
                                    ? fewgen::run_gfsl(ds, k, strat, seeds, pipe)
                                    : fewgen::run_fsl(ds, k, strat, seeds, pipe);
          r.config_echo = echo;
          reports.push_back(std::move(r));
          std::cerr << "done: " << (mode == fewgen::TaskMode::Gfsl ? "gfsl" : "fsl") << " "
                    << fewgen::strategy_name(strat) << " k=" << k << "\n";
        }
      }
    }
  } catch (...) {
    if (!reports.empty()) {
      fewgen::write_reports(out_dir, reports);
      std::cerr << "partial: wrote " << reports.size() << " of " << requested
                << " reports to " << out_dir << " before the failure\n";
    }
    throw;
  }

  fewgen::write_reports(out_dir, reports);
  announce(out_dir + "/report.csv");
  announce(out_dir + "/runs.json");
  announce(out_dir + "/table.txt");
  std::cout << fewgen::format_table(reports);
  return 0;
}

int cmd_ablate(const ConfigCli& cli, const std::string& input, const std::string& out_dir_flag) {
  const Config base_cfg = cli.resolve();
  const fewgen::Dataset ds = fewgen::load_features(input);
  const auto seeds = fewgen::run_seeds(base_cfg.seed, base_cfg.runs);
  const fewgen::Strategy strat = base_cfg.strategy_list().front();

  struct Arm {
    std::string pooling, pruning;
    std::size_t k;
    fewgen::RunReport report;
  };
  std::vector<Arm> arms;
  for (const std::string& pooling : {"none", "max", "avg"}) {
    for (const std::string& pruning : {"on", "off"}) {
      Config cfg = base_cfg;
      cfg.apply("pooling", pooling);
      cfg.apply("pruning", pruning);
      const fewgen::PipelineConfig pipe = cfg.pipeline();
      for (std::size_t k : cfg.k_list()) {
        fewgen::RunReport r = fewgen::run_gfsl(ds, k, strat, seeds, pipe);
        auto echo = cfg.echo();
        echo["input"] = input;
        r.config_echo = std::move(echo);
        arms.push_back(Arm{pooling, pruning, k, std::move(r)});
        std::cerr << "done: pooling=" << pooling << " pruning=" << pruning << " k=" << k << "\n";
      }
    }
  }

  const std::string out_dir = resolve_out_dir(out_dir_flag);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw fewgen::IoError("cannot create '" + out_dir + "': " + ec.message());

  std::string csv = "pooling,pruning,k,harmonic_mean,harmonic_std,novel_mean,novel_std\n";
  std::string table = "pooling  pruning  k  harmonic (mean +- std)  novel (mean +- std)\n";
  char buf[160];
  for (const Arm& a : arms) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%zu,%.9g,%.9g,%.9g,%.9g\n", a.pooling.c_str(),
                  a.pruning.c_str(), a.k, a.report.harmonic.mean, a.report.harmonic.stddev,
                  a.report.novel.mean, a.report.novel.stddev);
    csv += buf;
    std::snprintf(buf, sizeof(buf), "%-7s  %-7s  %zu  %6.2f +- %5.2f          %6.2f +- %5.2f\n",
                  a.pooling.c_str(), a.pruning.c_str(), a.k, a.report.harmonic.mean,
                  a.report.harmonic.stddev, a.report.novel.mean, a.report.novel.stddev);
    table += buf;
  }

  auto write_file = [&](const std::string& name, const std::string& content) {
    const std::string path = out_dir + "/" + name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw fewgen::IoError("cannot open '" + path + "' for writing");
    out << content;
    announce(path);
  };
  write_file("ablation.csv", csv);
  write_file("ablation.txt", table);
  nlohmann::json all = nlohmann::json::array();
  for (const Arm& a : arms) all.push_back(nlohmann::json::parse(a.report.to_json()));
  write_file("ablation_runs.json", all.dump(2) + "\n");
  std::cout << table;
  return 0;
}

int cmd_inspect(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw fewgen::IoError("cannot open " + path);
  char magic[4] = {0, 0, 0, 0};
  probe.read(magic, 4);
  const std::string tag(magic, magic + probe.gcount());
  probe.close();

  if (tag == "PGM1") {
    const fewgen::MlpNet net = fewgen::load_net(path);
    std::cout << path << ": network blob, " << net.depth() << " layers, " << net.in_dim()
              << " -> " << net.out_dim() << "\n";
    for (const auto& layer : net.layers()) {
      const char* act = layer.act.kind == fewgen::Act::Identity
                            ? "identity"
                            : (layer.act.kind == fewgen::Act::Sigmoid ? "sigmoid" : "leaky_relu");
      std::cout << "  " << layer.weight.cols() << " -> " << layer.weight.rows() << "  " << act
                << "\n";
    }
    return 0;
  }
  if (tag == "PGT1") {
    std::string manifest;
    const fewgen::GanTriple triple = fewgen::load_gan(path, &manifest);
    std::cout << path << ": synthesis bundle, d_x " << triple.d_x << ", d_phi " << triple.d_phi
              << ", d_z " << triple.d_z << "\n";
    std::cout << manifest << "\n";
    return 0;
  }
  if (!tag.empty() && tag[0] == '[') {  // a runs.json report array
    std::ifstream in(path, std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const nlohmann::json arr = nlohmann::json::parse(text);
    std::vector<fewgen::RunReport> reports;
    for (const auto& item : arr) reports.push_back(fewgen::RunReport::from_json(item.dump()));
    std::cout << path << ": " << reports.size() << " report(s)\n" << fewgen::format_table(reports);
    return 0;
  }

  const fewgen::Dataset ds = fewgen::load_features(path);
  std::cout << path << ": " << ds.records.size() << " records, dim " << ds.dim << ", "
            << ds.class_count() << " classes\n";
  const auto by_class = fewgen::indices_by_class(ds);
  for (std::uint32_t c = 0; c < by_class.size(); ++c) {
    std::cout << "  class " << ds.original_labels[c] << ": " << by_class[c].size()
              << " records\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"feature synthesis for few-shot classification"};
  app.require_subcommand(1);

  // gen-benchmark
  ConfigCli bench_cli;
  std::string bench_out = "benchmark.pgf";
  std::string bench_format = "auto";
  CLI::App* bench = app.add_subcommand("gen-benchmark", "write a synthetic feature file");
  bench_cli.attach(bench);
  bench_cli.alias(bench, "--classes", "bench_classes", "class count");
  bench_cli.alias(bench, "--dim", "bench_dim", "feature dimension");
  bench_cli.alias(bench, "--per-class", "bench_per_class", "records per class");
  bench_cli.alias(bench, "--mean-scale", "bench_mean_scale", "class-mean range");
  bench_cli.alias(bench, "--std", "bench_std", "within-class standard deviation");
  bench_cli.alias(bench, "--seed", "seed", "generation seed");
  bench->add_option("--out", bench_out, "output path (.csv for text, else binary)");
  bench->add_option("--format", bench_format, "bin | csv | auto")
      ->check(CLI::IsMember({"bin", "csv", "auto"}));

  // train-cptn
  ConfigCli cptn_cli;
  std::string cptn_input, cptn_out = "cptn.pgm";
  CLI::App* cptn = app.add_subcommand("train-cptn", "train the prototype network");
  cptn_cli.attach(cptn);
  cptn->add_option("--input", cptn_input, "training feature file")->required();
  cptn->add_option("--out", cptn_out, "output network blob");
  cptn_cli.alias(cptn, "--seed", "seed", "training seed");
  cptn_cli.alias(cptn, "--pooling", "pooling", "avg | max | none");
  cptn_cli.alias(cptn, "--pool-factor", "pool_factor", "pooling window width");
  cptn_cli.alias(cptn, "--epochs", "cptn_epochs", "training epochs");

  // train-cgan
  ConfigCli cgan_cli;
  std::string cgan_input, cgan_out = "gan.pgt";
  CLI::App* cgan = app.add_subcommand("train-cgan", "train the conditional generator bundle");
  cgan_cli.attach(cgan);
  cgan->add_option("--input", cgan_input, "training feature file")->required();
  cgan->add_option("--out", cgan_out, "output bundle");
  cgan_cli.alias(cgan, "--seed", "seed", "training seed");
  cgan_cli.alias(cgan, "--pooling", "pooling", "avg | max | none");
  cgan_cli.alias(cgan, "--pool-factor", "pool_factor", "pooling window width");
  cgan_cli.alias(cgan, "--epochs", "gan_epochs", "training epochs");

  // synth
  ConfigCli synth_cli;
  std::string synth_gan, synth_shots, synth_cptn, synth_strategy = "learned";
  std::string synth_out = "synth.pgf", synth_format = "auto";
  std::size_t synth_count = 0;
  CLI::App* synth = app.add_subcommand("synth", "generate synthetic features from a bundle");
  synth_cli.attach(synth);
  synth->add_option("--gan", synth_gan, "trained bundle")->required();
  synth->add_option("--shots", synth_shots, "feature file with the conditioning shots")->required();
  synth->add_option("--cptn", synth_cptn, "prototype network (learned strategy)");
  synth->add_option("--strategy", synth_strategy, "learned | heuristic | sample")
      ->check(CLI::IsMember({"learned", "heuristic", "sample"}));
  synth->add_option("--count", synth_count, "draws per class (0 = 2x largest class)");
  synth->add_option("--out", synth_out, "output feature file");
  synth->add_option("--format", synth_format, "bin | csv | auto")
      ->check(CLI::IsMember({"bin", "csv", "auto"}));
  synth_cli.alias(synth, "--seed", "seed", "noise seed");
  synth_cli.alias(synth, "--keep-fraction", "keep_fraction", "kept fraction after pruning");
  synth_cli.alias(synth, "--pruning", "pruning", "on | off");

  // run
  ConfigCli run_cli;
  std::string run_input, run_out_dir;
  CLI::App* run = app.add_subcommand("run", "full repeated-split evaluation");
  run_cli.attach(run);
  run->add_option("--input", run_input, "feature file")->required();
  run->add_option("--out-dir", run_out_dir,
                  "report directory (default $FEWGEN_OUT_DIR, then ./out)");
  run_cli.alias(run, "--mode", "mode", "gfsl | fsl | both");
  run_cli.alias(run, "--strategies", "strategies", "comma list or 'all'");
  run_cli.alias(run, "--k", "k", "comma list of shot counts");
  run_cli.alias(run, "--runs", "runs", "repetitions");
  run_cli.alias(run, "--seed", "seed", "master seed");
  run_cli.alias(run, "--jobs", "jobs", "concurrent runs (0 = hardware threads)");

  // ablate
  ConfigCli ablate_cli;
  std::string ablate_input, ablate_out_dir;
  CLI::App* ablate = app.add_subcommand("ablate", "pooling x pruning sweep, paired seeds");
  ablate_cli.attach(ablate);
  ablate->add_option("--input", ablate_input, "feature file")->required();
  ablate->add_option("--out-dir", ablate_out_dir,
                     "report directory (default $FEWGEN_OUT_DIR, then ./out)");
  ablate_cli.alias(ablate, "--strategies", "strategies", "strategy for every arm (first entry)");
  ablate_cli.alias(ablate, "--k", "k", "comma list of shot counts");
  ablate_cli.alias(ablate, "--runs", "runs", "repetitions per arm");
  ablate_cli.alias(ablate, "--seed", "seed", "master seed (shared across arms)");
  ablate_cli.alias(ablate, "--jobs", "jobs", "concurrent runs");

  // inspect
  std::string inspect_path;
  CLI::App* inspect = app.add_subcommand("inspect", "describe a file produced by this tool");
  inspect->add_option("path", inspect_path, "feature file, network blob, bundle, or runs.json")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (bench->parsed()) return cmd_gen_benchmark(bench_cli, bench_out, bench_format);
    if (cptn->parsed()) return cmd_train_cptn(cptn_cli, cptn_input, cptn_out);
    if (cgan->parsed()) return cmd_train_cgan(cgan_cli, cgan_input, cgan_out);
    if (synth->parsed()) {
      return cmd_synth(synth_cli, synth_gan, synth_shots, synth_cptn, synth_strategy, synth_count,
                       synth_out, synth_format);
    }
    if (run->parsed()) return cmd_run(run_cli, run_input, run_out_dir);
    if (ablate->parsed()) return cmd_ablate(ablate_cli, ablate_input, ablate_out_dir);
    if (inspect->parsed()) return cmd_inspect(inspect_path);
  } catch (const fewgen::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
