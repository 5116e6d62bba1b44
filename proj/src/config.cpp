#include "fewgen/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>

#include "fewgen/errors.hpp"

namespace fewgen {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v.empty() || v[0] == '-') throw ConfigError(key + ": expected a non-negative integer");
  errno = 0;
  char* end = nullptr;
  const unsigned long long parsed = std::strtoull(v.c_str(), &end, 10);
  if (errno != 0 || end == v.c_str() || *end != '\0') {
    throw ConfigError(key + ": cannot parse '" + value + "' as an integer");
  }
  return static_cast<std::uint64_t>(parsed);
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  return static_cast<std::size_t>(parse_u64(key, value));
}

double parse_double(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v.empty()) throw ConfigError(key + ": expected a number");
  errno = 0;
  char* end = nullptr;
  const double parsed = std::strtod(v.c_str(), &end);
  if (errno != 0 || end == v.c_str() || *end != '\0' || !std::isfinite(parsed)) {
    throw ConfigError(key + ": cannot parse '" + value + "' as a finite number");
  }
  return parsed;
}

std::string print_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::size_t end = comma == std::string::npos ? s.size() : comma;
    out.push_back(trim(s.substr(start, end - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

struct KeySpec {
  std::string name;
  std::string help;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

const std::vector<KeySpec>& key_specs() {
  auto size_key = [](std::string name, std::string help, std::size_t Config::*field) {
    return KeySpec{name, help,
                   [name, field](Config& c, const std::string& v) { c.*field = parse_size(name, v); },
                   [field](const Config& c) { return std::to_string(c.*field); }};
  };
  auto double_key = [](std::string name, std::string help, double Config::*field) {
    return KeySpec{name, help,
                   [name, field](Config& c, const std::string& v) { c.*field = parse_double(name, v); },
                   [field](const Config& c) { return print_double(c.*field); }};
  };
  auto choice_key = [](std::string name, std::string help, std::string Config::*field,
                       std::vector<std::string> allowed) {
    return KeySpec{name, help,
                   [name, field, allowed](Config& c, const std::string& v) {
                     const std::string t = trim(v);
                     for (const std::string& a : allowed) {
                       if (t == a) {
                         c.*field = t;
                         return;
                       }
                     }
                     std::string opts;
                     for (const std::string& a : allowed) opts += (opts.empty() ? "" : ", ") + a;
                     throw ConfigError(name + ": '" + v + "' is not one of: " + opts);
                   },
                   [field](const Config& c) { return c.*field; }};
  };

  static const std::vector<KeySpec> specs = [&] {
    std::vector<KeySpec> s;
    s.push_back(choice_key("mode", "evaluation mode", &Config::mode, {"gfsl", "fsl", "both"}));
    s.push_back(KeySpec{"strategies", "comma list of base,heuristic,sample,learned, or 'all'",
                        [](Config& c, const std::string& v) {
                          c.strategies = trim(v);
                          c.strategy_list();  // validates
                        },
                        [](const Config& c) { return c.strategies; }});
    s.push_back(KeySpec{"k", "comma list of shots per novel class",
                        [](Config& c, const std::string& v) {
                          c.k = trim(v);
                          c.k_list();  // validates
                        },
                        [](const Config& c) { return c.k; }});
    s.push_back(size_key("runs", "independent repetitions per setting", &Config::runs));
    s.push_back(KeySpec{"seed", "master seed for every derived stream",
                        [](Config& c, const std::string& v) { c.seed = parse_u64("seed", v); },
                        [](const Config& c) { return std::to_string(c.seed); }});
    s.push_back(size_key("jobs", "concurrent runs (0 = hardware threads)", &Config::jobs));

    s.push_back(size_key("seen_classes", "seen-class count (0 = half, rounded up)",
                         &Config::seen_classes));
    s.push_back(size_key("novel_classes", "novel-class count (0 = remainder)",
                         &Config::novel_classes));
    s.push_back(double_key("seen_holdout", "held-out fraction of each seen class",
                           &Config::seen_holdout));

    s.push_back(choice_key("pooling", "prototype window pooling", &Config::pooling,
                           {"avg", "max", "none"}));
    s.push_back(size_key("pool_factor", "pooling window width", &Config::pool_factor));

    s.push_back(size_key("cptn_hidden", "prototype-net hidden width (0 = dim / 4)",
                         &Config::cptn_hidden));
    s.push_back(size_key("cptn_epochs", "prototype-net training epochs", &Config::cptn_epochs));
    s.push_back(double_key("cptn_lr", "prototype-net learning rate", &Config::cptn_lr));
    s.push_back(double_key("cptn_weight_decay", "prototype-net weight decay",
                           &Config::cptn_weight_decay));
    s.push_back(size_key("cptn_batch", "prototype-net batch size", &Config::cptn_batch));

    s.push_back(size_key("d_z", "noise dim (0 = prototype dim)", &Config::d_z));
    s.push_back(size_key("gen_hidden", "generator hidden width (0 = feature dim)",
                         &Config::gen_hidden));
    s.push_back(size_key("disc_hidden", "critic hidden width (0 = feature dim)",
                         &Config::disc_hidden));
    s.push_back(size_key("dec_hidden", "decoder hidden width (0 = feature dim)",
                         &Config::dec_hidden));
    s.push_back(double_key("alpha", "gradient-penalty coefficient", &Config::alpha));
    s.push_back(double_key("lambda", "reconstruction-loss weight", &Config::lambda));
    s.push_back(double_key("gamma", "cross-class-similarity weight", &Config::gamma));
    s.push_back(double_key("gan_lr", "adversarial learning rate", &Config::gan_lr));
    s.push_back(double_key("gan_weight_decay", "adversarial weight decay",
                           &Config::gan_weight_decay));
    s.push_back(size_key("gan_epochs", "adversarial training epochs", &Config::gan_epochs));
    s.push_back(size_key("gan_batch", "adversarial batch size", &Config::gan_batch));
    s.push_back(size_key("critic_steps", "critic updates per generator update",
                         &Config::critic_steps));

    s.push_back(size_key("clf_epochs", "classifier training epochs", &Config::clf_epochs));
    s.push_back(double_key("clf_lr", "classifier learning rate", &Config::clf_lr));
    s.push_back(double_key("clf_weight_decay", "classifier weight decay",
                           &Config::clf_weight_decay));
    s.push_back(size_key("clf_batch", "classifier batch size", &Config::clf_batch));

    s.push_back(double_key("keep_fraction", "fraction of synthesized rows kept after pruning",
                           &Config::keep_fraction));
    s.push_back(choice_key("pruning", "reconstruction-loss pruning", &Config::pruning,
                           {"on", "off"}));
    s.push_back(size_key("resample_multiple", "per-shot duplication for the no-synthesis baseline",
                         &Config::resample_multiple));
    s.push_back(double_key("jitter_scale", "duplicate jitter as a fraction of the feature spread",
                           &Config::jitter_scale));

    s.push_back(size_key("bench_classes", "benchmark class count", &Config::bench_classes));
    s.push_back(size_key("bench_dim", "benchmark feature dim", &Config::bench_dim));
    s.push_back(size_key("bench_per_class", "benchmark records per class",
                         &Config::bench_per_class));
    s.push_back(double_key("bench_mean_scale", "benchmark class-mean range",
                           &Config::bench_mean_scale));
    s.push_back(double_key("bench_std", "benchmark within-class standard deviation",
                           &Config::bench_std));
    return s;
  }();
  return specs;
}

}  // namespace

void Config::apply(const std::string& key, const std::string& value) {
  const std::string k = trim(key);
  for (const KeySpec& spec : key_specs()) {
    if (spec.name == k) {
      spec.set(*this, value);
      return;
    }
  }
  throw ConfigError("unknown configuration key '" + key + "'");
}

std::map<std::string, std::string> Config::echo() const {
  std::map<std::string, std::string> out;
  for (const KeySpec& spec : key_specs()) out[spec.name] = spec.get(*this);
  return out;
}

PipelineConfig Config::pipeline() const {
  PipelineConfig p;
  p.n_seen = seen_classes;
  p.n_novel = novel_classes;
  p.seen_holdout = seen_holdout;

  if (pooling == "avg") {
    p.agg.pooling = Pooling::Average;
  } else if (pooling == "max") {
    p.agg.pooling = Pooling::Max;
  } else if (pooling == "none") {
    p.agg.pooling = Pooling::None;
  } else {
    throw ConfigError("pooling: unknown value '" + pooling + "'");
  }
  p.agg.pool_factor = pool_factor;

  p.cptn.hidden = cptn_hidden;
  p.cptn.epochs = cptn_epochs;
  p.cptn.lr = cptn_lr;
  p.cptn.weight_decay = cptn_weight_decay;
  p.cptn.batch = cptn_batch;

  p.gan.d_z = d_z;
  p.gan.gen_hidden = gen_hidden;
  p.gan.disc_hidden = disc_hidden;
  p.gan.dec_hidden = dec_hidden;
  p.gan.alpha = alpha;
  p.gan.lambda = lambda;
  p.gan.gamma = gamma;
  p.gan.lr = gan_lr;
  p.gan.weight_decay = gan_weight_decay;
  p.gan.epochs = gan_epochs;
  p.gan.batch = gan_batch;
  p.gan.critic_steps = critic_steps;

  p.clf.epochs = clf_epochs;
  p.clf.lr = clf_lr;
  p.clf.weight_decay = clf_weight_decay;
  p.clf.batch = clf_batch;

  p.build.resample_multiple = resample_multiple;
  p.build.jitter_scale = jitter_scale;

  p.keep_fraction = keep_fraction;
  p.pruning = pruning == "on";
  p.jobs = jobs;

  p.validate();
  return p;
}

std::vector<Strategy> Config::strategy_list() const {
  std::vector<Strategy> out;
  if (trim(strategies) == "all") {
    return {Strategy::Base, Strategy::Heuristic, Strategy::Sample, Strategy::Learned};
  }
  for (const std::string& token : split_list(strategies)) {
    Strategy s;
    if (token == "base") {
      s = Strategy::Base;
    } else if (token == "heuristic") {
      s = Strategy::Heuristic;
    } else if (token == "sample") {
      s = Strategy::Sample;
    } else if (token == "learned") {
      s = Strategy::Learned;
    } else {
      throw ConfigError("strategies: unknown entry '" + token + "'");
    }
    for (Strategy prev : out) {
      if (prev == s) throw ConfigError("strategies: duplicate entry '" + token + "'");
    }
    out.push_back(s);
  }
  if (out.empty()) throw ConfigError("strategies: empty list");
  return out;
}

std::vector<std::size_t> Config::k_list() const {
  std::vector<std::size_t> out;
  for (const std::string& token : split_list(k)) {
    const std::size_t v = parse_size("k", token);
    if (v == 0) throw ConfigError("k: shot counts must be positive");
    for (std::size_t prev : out) {
      if (prev == v) throw ConfigError("k: duplicate entry '" + token + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("k: empty list");
  return out;
}

std::vector<TaskMode> Config::mode_list() const {
  if (mode == "gfsl") return {TaskMode::Gfsl};
  if (mode == "fsl") return {TaskMode::Fsl};
  if (mode == "both") return {TaskMode::Gfsl, TaskMode::Fsl};
  throw ConfigError("mode: unknown value '" + mode + "'");
}

void load_config_file(const std::string& path, Config& cfg) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    try {
      cfg.apply(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

const std::vector<std::pair<std::string, std::string>>& config_key_help() {
  static const std::vector<std::pair<std::string, std::string>> help = [] {
    std::vector<std::pair<std::string, std::string>> h;
    for (const KeySpec& spec : key_specs()) h.emplace_back(spec.name, spec.help);
    return h;
  }();
  return help;
}

}  // namespace fewgen
