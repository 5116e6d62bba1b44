#include "fewgen/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "fewgen/bytes.hpp"
#include "fewgen/errors.hpp"
#include "fewgen/rng.hpp"

namespace fewgen {

namespace {

// Remaps arbitrary labels to dense ids (ascending original order) in place.
Dataset densify(std::vector<FeatureRecord> records, std::size_t dim) {
  std::map<std::uint32_t, std::uint32_t> remap;
  for (const FeatureRecord& r : records) remap.emplace(r.label, 0);
  Dataset ds;
  ds.dim = dim;
  ds.original_labels.reserve(remap.size());
  std::uint32_t next = 0;
  for (auto& [orig, dense] : remap) {
    dense = next++;
    ds.original_labels.push_back(orig);
  }
  for (FeatureRecord& r : records) r.label = remap[r.label];
  ds.records = std::move(records);
  return ds;
}

Dataset load_binary(std::istream& is, const std::string& path) {
  bytes::expect_magic(is, "PGF1", path.c_str());
  const std::uint32_t count = bytes::read_u32(is, "record count");
  const std::uint32_t dim = bytes::read_u32(is, "feature dim");
  if (dim == 0) throw IngestError(path + ": feature dim is zero");
  std::vector<FeatureRecord> records;
  records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    FeatureRecord r;
    r.label = bytes::read_u32(is, "record label");
    r.values.resize(dim);
    for (std::uint32_t j = 0; j < dim; ++j) {
      r.values[j] = bytes::read_f32(is, "feature value");
      if (!std::isfinite(r.values[j])) {
        throw IngestError(path + ": record " + std::to_string(i) + " has a non-finite value");
      }
    }
    records.push_back(std::move(r));
  }
  return densify(std::move(records), dim);
}

Dataset load_csv(std::istream& is, const std::string& path) {
  std::string line;
  if (!std::getline(is, line)) throw IngestError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  // Header: label,f0,f1,...
  std::size_t dim = 0;
  {
    std::stringstream header(line);
    std::string cell;
    if (!std::getline(header, cell, ',') || cell != "label") {
      throw IngestError(path + ": header must start with 'label', got '" + cell + "'");
    }
    while (std::getline(header, cell, ',')) {
      if (cell != "f" + std::to_string(dim)) {
        throw IngestError(path + ": header column " + std::to_string(dim + 1) +
                          " must be 'f" + std::to_string(dim) + "', got '" + cell + "'");
      }
      ++dim;
    }
  }
  if (dim == 0) throw IngestError(path + ": header has no feature columns");

  std::vector<FeatureRecord> records;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    FeatureRecord r;
    if (!std::getline(ss, cell, ',')) {
      throw IngestError(path + ": row " + std::to_string(row) + " is malformed");
    }
    try {
      std::size_t pos = 0;
      const long long label = std::stoll(cell, &pos);
      if (pos != cell.size() || label < 0 || label > 0xffffffffLL) throw std::invalid_argument("");
      r.label = static_cast<std::uint32_t>(label);
    } catch (const std::exception&) {
      throw IngestError(path + ": row " + std::to_string(row) + " has a bad label '" + cell + "'");
    }
    r.values.reserve(dim);
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t pos = 0;
        const float v = std::stof(cell, &pos);
        if (pos != cell.size() || !std::isfinite(v)) throw std::invalid_argument("");
        r.values.push_back(v);
      } catch (const std::exception&) {
        throw IngestError(path + ": row " + std::to_string(row) + " has a bad value '" + cell +
                          "'");
      }
    }
    if (r.values.size() != dim) {
      throw IngestError(path + ": row " + std::to_string(row) + " has " +
                        std::to_string(r.values.size()) + " values, expected " +
                        std::to_string(dim));
    }
    records.push_back(std::move(r));
  }
  return densify(std::move(records), dim);
}

}  // namespace

Dataset load_features(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[4] = {0, 0, 0, 0};
  is.read(magic, 4);
  is.clear();
  is.seekg(0);
  if (std::memcmp(magic, "PGF1", 4) == 0) return load_binary(is, path);
  return load_csv(is, path);
}

void save_features_csv(const std::string& path, const std::vector<FeatureRecord>& records,
                       std::size_t dim) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "label";
  for (std::size_t j = 0; j < dim; ++j) os << ",f" << j;
  os << "\n";
  char buf[64];
  for (const FeatureRecord& r : records) {
    if (r.values.size() != dim) throw ShapeError("save_features_csv: record dim mismatch");
    os << r.label;
    for (float v : r.values) {
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
      os << ',' << buf;
    }
    os << "\n";
  }
  if (!os) throw IoError("write failed for " + path);
}

void save_features_binary(const std::string& path, const std::vector<FeatureRecord>& records,
                          std::size_t dim) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  bytes::write_magic(os, "PGF1");
  bytes::write_u32(os, static_cast<std::uint32_t>(records.size()));
  bytes::write_u32(os, static_cast<std::uint32_t>(dim));
  for (const FeatureRecord& r : records) {
    if (r.values.size() != dim) throw ShapeError("save_features_binary: record dim mismatch");
    bytes::write_u32(os, r.label);
    for (float v : r.values) bytes::write_f32(os, v);
  }
  if (!os) throw IoError("write failed for " + path);
}

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& ds) {
  std::vector<std::vector<std::size_t>> out(ds.class_count());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    out[ds.records[i].label].push_back(i);
  }
  return out;
}

Matrix to_matrix(const std::vector<FeatureRecord>& records, std::size_t dim) {
  Matrix m(records.size(), dim);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].values.size() != dim) throw ShapeError("to_matrix: record dim mismatch");
    for (std::size_t j = 0; j < dim; ++j) m(i, j) = records[i].values[j];
  }
  return m;
}

Matrix to_matrix(const std::vector<const FeatureRecord*>& records, std::size_t dim) {
  Matrix m(records.size(), dim);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i]->values.size() != dim) throw ShapeError("to_matrix: record dim mismatch");
    for (std::size_t j = 0; j < dim; ++j) m(i, j) = records[i]->values[j];
  }
  return m;
}

SplitResult split_classes(std::size_t n_classes, std::size_t n_seen, std::size_t n_novel,
                          std::uint64_t seed) {
  if (n_seen == 0 || n_novel == 0) {
    throw ContractError("split_classes: both sides of the split must be non-empty");
  }
  if (n_seen + n_novel > n_classes) {
    throw ContractError("split_classes: " + std::to_string(n_seen) + " + " +
                        std::to_string(n_novel) + " exceeds " + std::to_string(n_classes) +
                        " classes");
  }
  std::vector<std::uint32_t> ids(n_classes);
  for (std::size_t i = 0; i < n_classes; ++i) ids[i] = static_cast<std::uint32_t>(i);
  Rng rng(seed);
  rng.shuffle(ids);
  SplitResult out;
  out.seen.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_seen));
  out.novel.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_seen),
                   ids.begin() + static_cast<std::ptrdiff_t>(n_seen + n_novel));
  std::sort(out.seen.begin(), out.seen.end());
  std::sort(out.novel.begin(), out.novel.end());
  return out;
}

ShotSplit sample_k_shots(std::size_t class_size, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw ContractError("sample_k_shots: k must be at least 1");
  if (k >= class_size) {
    throw ContractError("sample_k_shots: k = " + std::to_string(k) +
                        " leaves no held-out sample in a class of size " +
                        std::to_string(class_size));
  }
  std::vector<std::size_t> idx(class_size);
  for (std::size_t i = 0; i < class_size; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  ShotSplit out;
  out.shots.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  out.heldout.assign(idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end());
  std::sort(out.shots.begin(), out.shots.end());
  std::sort(out.heldout.begin(), out.heldout.end());
  return out;
}

Dataset generate_benchmark(const BenchmarkSpec& spec) {
  if (spec.classes < 2) throw ConfigError("benchmark: need at least 2 classes");
  if (spec.dim == 0) throw ConfigError("benchmark: feature dim must be positive");
  if (spec.per_class < 2) {
    throw ConfigError("benchmark: need at least 2 records per class (shot + held-out)");
  }
  if (!(spec.within_std > 0.0) || !std::isfinite(spec.within_std)) {
    throw ConfigError("benchmark: within-class std must be positive");
  }
  if (!(spec.mean_scale > 0.0) || !std::isfinite(spec.mean_scale)) {
    throw ConfigError("benchmark: mean scale must be positive");
  }
  Dataset ds;
  ds.dim = spec.dim;
  ds.records.reserve(spec.classes * spec.per_class);
  ds.original_labels.reserve(spec.classes);
  std::vector<double> mean(spec.dim);
  for (std::size_t c = 0; c < spec.classes; ++c) {
    ds.original_labels.push_back(static_cast<std::uint32_t>(c));
    Rng rng(child_seed(spec.seed, Seed::BenchmarkClass, c));
    for (std::size_t j = 0; j < spec.dim; ++j) mean[j] = spec.mean_scale * rng.uniform();
    for (std::size_t s = 0; s < spec.per_class; ++s) {
      FeatureRecord r;
      r.label = static_cast<std::uint32_t>(c);
      r.values.resize(spec.dim);
      for (std::size_t j = 0; j < spec.dim; ++j) {
        r.values[j] = static_cast<float>(mean[j] + spec.within_std * rng.normal());
      }
      ds.records.push_back(std::move(r));
    }
  }
  return ds;
}

}  // namespace fewgen
