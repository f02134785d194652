// Copyright 2026 The bal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "bal/matrix_io.hpp"
#include "bal/random.hpp"

namespace bal {

std::string to_string(Split split) { return split == Split::train ? "train" : "test"; }

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw InvalidArgument("unknown split '" + s + "' (expected train or test)");
}

std::vector<SampleIndex> Dataset::indices(Split split) const {
  std::vector<SampleIndex> out;
  for (std::size_t i = 0; i < splits.size(); ++i)
    if (splits[i] == split) out.push_back(i);
  return out;
}

std::optional<SampleIndex> Dataset::find(const std::string& id) const {
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return i;
  return std::nullopt;
}

void Dataset::validate() const {
  const std::size_t n = ids.size();
  if (labels.size() != n || splits.size() != n || static_cast<std::size_t>(features.rows()) != n)
    throw InvalidArgument("dataset '" + name + "': ids, labels, splits and features differ in length");
  if (!audio_paths.empty() && audio_paths.size() != n)
    throw InvalidArgument("dataset '" + name + "': audio path count differs from sample count");
  if (classes < 1) throw InvalidArgument("dataset '" + name + "': class count must be positive");
  if (static_cast<Eigen::Index>(record_rows) * record_cols != features.cols())
    throw InvalidArgument("dataset '" + name + "': record shape does not match feature width");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen.insert(ids[i]).second) throw InvalidArgument("dataset '" + name + "': duplicate id '" + ids[i] + "'");
    if (labels[i] < -1 || labels[i] >= classes)
      throw InvalidArgument("dataset '" + name + "': label out of range for '" + ids[i] + "'");
  }
  if (!features.allFinite()) throw InvalidArgument("dataset '" + name + "': non-finite features");
}

// ---------------------------------------------------------------- manifest

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, '\t')) out.push_back(field);
  if (!line.empty() && line.back() == '\t') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

std::optional<int> parse_label(const std::string& field, const std::string& where) {
  if (field.empty() || field == "-") return std::nullopt;
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(field, &used);
  } catch (const std::exception&) {
    throw IngestError(where + ": label '" + field + "' is not an integer");
  }
  if (used != field.size() || v < 0) throw IngestError(where + ": label '" + field + "' is not a non-negative integer");
  return v;
}

}  // namespace

std::vector<ManifestRecord> parse_manifest(std::istream& is, const std::string& name) {
  std::vector<ManifestRecord> out;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_tabs(line);
    const std::string where = name + ":" + std::to_string(lineno);
    if (f.size() < 2 || f.size() > 4) throw IngestError(where + ": expected 2-4 tab-separated fields");
    ManifestRecord r;
    r.id = trim(f[0]);
    r.path = trim(f[1]);
    if (r.id.empty() || r.path.empty()) throw IngestError(where + ": empty id or path");
    if (f.size() >= 3) r.label = parse_label(trim(f[2]), where);
    if (f.size() == 4 && !trim(f[3]).empty()) r.split = trim(f[3]);
    if (r.split != "train" && r.split != "test" && r.split != "auto")
      throw IngestError(where + ": split must be train, test or auto");
    if (!seen.insert(r.id).second) throw IngestError(where + ": duplicate id '" + r.id + "'");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IngestError(path.string() + ": cannot open manifest");
  return parse_manifest(is, path.string());
}

void assign_stratified_holdout(std::vector<ManifestRecord>& records, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw InvalidArgument("test fraction must lie in [0, 1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].split == "auto" && records[i].label) by_class[*records[i].label].push_back(i);
  Rng rng(seed);
  for (auto& [label, members] : by_class) {
    const auto n_test = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
    for (auto i : sample_without_replacement(members, n_test, rng)) records[i].split = "test";
  }
  for (auto& r : records)
    if (r.split == "auto") r.split = "train";
}

Dataset ingest_dataset(const std::filesystem::path& manifest, const std::filesystem::path& root,
                       const IngestOptions& options) {
  auto records = read_manifest(manifest);
  if (records.empty()) throw IngestError(manifest.string() + ": manifest has no records");
  assign_stratified_holdout(records, options.test_fraction, options.seed);

  Dataset ds;
  ds.name = options.name;
  int max_label = -1;
  for (const auto& r : records)
    if (r.label) max_label = std::max(max_label, *r.label);
  ds.classes = options.classes > 0 ? options.classes : max_label + 1;
  ds.record_rows = static_cast<int>(audio::kMelBands);
  ds.record_cols = static_cast<int>(audio::kFrames);
  ds.features.resize(static_cast<Eigen::Index>(records.size()), ds.record_rows * ds.record_cols);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const std::filesystem::path wav = std::filesystem::absolute(root / r.path);
    const auto clip = audio::ingest_wav(wav);
    ds.features.row(static_cast<Eigen::Index>(i)) = audio::mel_spectrogram(clip).flattened().transpose();
    ds.ids.push_back(r.id);
    ds.labels.push_back(r.label.value_or(-1));
    ds.splits.push_back(split_from_string(r.split));
    ds.audio_paths.push_back(wav.string());
  }
  ds.validate();
  return ds;
}

// ---------------------------------------------------------------- feature cache

void write_feature_cache(const std::filesystem::path& prefix, const Dataset& dataset) {
  dataset.validate();
  write_matrix_file(prefix.string() + ".bin", MatrixFile::from_rows(dataset.features, dataset.record_rows, dataset.record_cols));
  std::ofstream os(prefix.string() + ".index.tsv");
  if (!os) throw IngestError("cannot write " + prefix.string() + ".index.tsv");
  os << "#name\t" << dataset.name << '\n';
  os << "#classes\t" << dataset.classes << '\n';
  os << "index\tid\tlabel\tsplit\taudio\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    os << i << '\t' << dataset.ids[i] << '\t';
    if (dataset.labels[i] >= 0)
      os << dataset.labels[i];
    else
      os << '-';
    os << '\t' << to_string(dataset.splits[i]) << '\t' << (dataset.has_audio() ? dataset.audio_paths[i] : "") << '\n';
  }
}

Dataset read_feature_cache(const std::filesystem::path& prefix) {
  const auto bin = prefix.string() + ".bin";
  const auto index = prefix.string() + ".index.tsv";
  const MatrixFile mf = read_matrix_file(bin);
  std::ifstream is(index);
  if (!is) throw IngestError(index + ": cannot open cache index");
  Dataset ds;
  ds.record_rows = mf.rows;
  ds.record_cols = mf.cols;
  ds.features = mf.as_rows();
  std::string line;
  int lineno = 0;
  bool any_audio = false;
  std::vector<std::string> audio;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (line[0] == '#') {
      if (f.size() >= 2 && f[0] == "#name") ds.name = f[1];
      if (f.size() >= 2 && f[0] == "#classes") ds.classes = std::stoi(f[1]);
      continue;
    }
    if (f[0] == "index") continue;
    const std::string where = index + ":" + std::to_string(lineno);
    if (f.size() < 4) throw IngestError(where + ": expected index, id, label, split[, audio]");
    if (std::stoul(f[0]) != ds.ids.size()) throw IngestError(where + ": records out of order");
    ds.ids.push_back(f[1]);
    ds.labels.push_back(parse_label(f[2], where).value_or(-1));
    ds.splits.push_back(split_from_string(f[3]));
    audio.push_back(f.size() >= 5 ? f[4] : "");
    any_audio = any_audio || !audio.back().empty();
  }
  if (ds.ids.size() != static_cast<std::size_t>(mf.count))
    throw IngestError(index + ": " + std::to_string(ds.ids.size()) + " index records for " + std::to_string(mf.count) +
                      " feature records");
  if (any_audio) ds.audio_paths = std::move(audio);
  if (ds.classes <= 0) {
    for (int y : ds.labels) ds.classes = std::max(ds.classes, y + 1);
  }
  ds.validate();
  return ds;
}

// ---------------------------------------------------------------- synthetic

Dataset make_gaussian_clusters(const GaussianClustersConfig& cfg) {
  if (cfg.classes < 1 || cfg.dim < 1 || cfg.points < static_cast<std::size_t>(cfg.classes))
    throw InvalidArgument("make_gaussian_clusters: need at least one point per class");
  Rng rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix centers(cfg.classes, cfg.dim);
  for (Eigen::Index k = 0; k < centers.rows(); ++k)
    for (Eigen::Index j = 0; j < centers.cols(); ++j) centers(k, j) = cfg.center_scale * normal(rng);

  Dataset ds;
  ds.name = "gaussian_clusters";
  ds.classes = cfg.classes;
  ds.record_rows = 1;
  ds.record_cols = cfg.dim;
  ds.features.resize(static_cast<Eigen::Index>(cfg.points), cfg.dim);
  std::vector<ManifestRecord> records;
  for (std::size_t i = 0; i < cfg.points; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(cfg.classes));
    for (int j = 0; j < cfg.dim; ++j)
      ds.features(static_cast<Eigen::Index>(i), j) = centers(label, j) + cfg.spread * normal(rng);
    ManifestRecord r;
    r.id = "g" + std::to_string(i);
    r.label = label;
    records.push_back(r);
  }
  assign_stratified_holdout(records, cfg.test_fraction, derive_seed(cfg.seed, {0x7E57}));
  for (const auto& r : records) {
    ds.ids.push_back(r.id);
    ds.labels.push_back(*r.label);
    ds.splits.push_back(split_from_string(r.split));
  }
  ds.validate();
  return ds;
}

// ---------------------------------------------------------------- standardization

Standardizer Standardizer::fit(const RowMatrix& rows) {
  if (rows.rows() == 0) throw InvalidArgument("Standardizer::fit: no rows");
  Standardizer s;
  s.mean = rows.colwise().mean().transpose();
  s.scale.resize(rows.cols());
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    const double var = (rows.col(j).array() - s.mean[j]).square().mean();
    s.scale[j] = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
  }
  return s;
}

void Standardizer::apply(RowMatrix& rows) const {
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    rows.row(i) = ((rows.row(i).transpose() - mean).array() * scale.array()).transpose();
}

Vector Standardizer::apply(const Vector& x) const { return ((x - mean).array() * scale.array()).matrix(); }

Standardizer standardize_dataset(Dataset& dataset) {
  const auto train = dataset.indices(Split::train);
  RowMatrix rows(static_cast<Eigen::Index>(train.size()), dataset.features.cols());
  for (std::size_t i = 0; i < train.size(); ++i) rows.row(static_cast<Eigen::Index>(i)) = dataset.features.row(static_cast<Eigen::Index>(train[i]));
  Standardizer s = Standardizer::fit(rows);
  s.apply(dataset.features);
  return s;
}

AudioFeatureAugmenter::AudioFeatureAugmenter(std::vector<audio::AudioClip> clips, audio::AugmentationConfig cfg,
                                             std::optional<Standardizer> standardizer)
    : clips_(std::move(clips)), cfg_(std::move(cfg)), standardizer_(std::move(standardizer)) {
  cfg_.validate();
}

Vector AudioFeatureAugmenter::augmented(SampleIndex sample, std::uint64_t seed) const {
  if (sample >= clips_.size()) throw InvalidArgument("AudioFeatureAugmenter: sample index out of range");
  const auto& clip = clips_[sample];
  Vector x = enabled() ? audio::mel_spectrogram(audio::augment(clip, cfg_, seed).clip).flattened()
                       : audio::mel_spectrogram(clip).flattened();
  return standardizer_ ? standardizer_->apply(x) : x;
}

std::vector<audio::AudioClip> load_dataset_clips(const Dataset& dataset) {
  if (!dataset.has_audio()) throw InvalidArgument("dataset '" + dataset.name + "' has no audio paths");
  std::vector<audio::AudioClip> clips;
  clips.reserve(dataset.size());
  for (const auto& p : dataset.audio_paths) clips.push_back(audio::ingest_wav(p));
  return clips;
}

}  // namespace bal
