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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bal/audio.hpp"
#include "bal/augmenter.hpp"
#include "bal/common.hpp"

namespace bal {

// `train` samples are available to active learning (labeled set or pool);
// `test` samples form the held-out evaluation split.
enum class Split { train, test };

std::string to_string(Split split);
Split split_from_string(const std::string& s);

struct Dataset {
  std::string name;
  int classes = 0;
  std::vector<std::string> ids;
  std::vector<int> labels;  // -1 when unknown
  std::vector<Split> splits;
  RowMatrix features;       // one flattened record per row
  int record_rows = 1;      // record shape, 32 x 32 for spectrograms
  int record_cols = 0;
  std::vector<std::string> audio_paths;  // per sample; empty when the dataset has no audio

  std::size_t size() const { return ids.size(); }
  bool has_audio() const { return !audio_paths.empty(); }
  std::vector<SampleIndex> indices(Split split) const;
  std::optional<SampleIndex> find(const std::string& id) const;
  void validate() const;
};

// ---------------------------------------------------------------- manifest

// One record per line, tab separated:
//
//   id <TAB> wav path (relative to the manifest root) <TAB> label <TAB> split
//
// label is a non-negative integer or "-" (unknown); split is train, test or auto
// (auto = assigned by the stratified holdout). Trailing label and split fields
// may be omitted (unknown, auto). Ids must be unique. Blank lines and lines
// starting with '#' are ignored.
struct ManifestRecord {
  std::string id;
  std::string path;
  std::optional<int> label;
  std::string split = "auto";
};

std::vector<ManifestRecord> parse_manifest(std::istream& is, const std::string& name);
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);

// Marks round(fraction * n_k) random samples of every labeled class k as test,
// among records whose split is "auto". Remaining auto records become train.
void assign_stratified_holdout(std::vector<ManifestRecord>& records, double fraction, std::uint64_t seed);

struct IngestOptions {
  std::string name = "dataset";
  int classes = 0;  // 0: 1 + largest label
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

// Decodes every WAV, normalizes to 1 s at 16 kHz, computes 32x32 log-mel features.
Dataset ingest_dataset(const std::filesystem::path& manifest, const std::filesystem::path& root,
                       const IngestOptions& options);

// ---------------------------------------------------------------- feature cache

// `prefix`.bin is a matrix file (count = samples, rows x cols = record shape);
// `prefix`.index.tsv maps record index to id, label, split and audio path, with
// '#'-prefixed metadata lines for the dataset name and class count.
void write_feature_cache(const std::filesystem::path& prefix, const Dataset& dataset);
Dataset read_feature_cache(const std::filesystem::path& prefix);

// ---------------------------------------------------------------- synthetic data

struct GaussianClustersConfig {
  int classes = 10;
  std::size_t points = 500;
  int dim = 8;
  double center_scale = 1.0;   // cluster centers ~ N(0, center_scale^2 I)
  double spread = 0.35;        // within-cluster std
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

// Balanced Gaussian blobs, one class per cluster, with a stratified test split.
Dataset make_gaussian_clusters(const GaussianClustersConfig& cfg);

// ---------------------------------------------------------------- standardization

struct Standardizer {
  Vector mean;
  Vector scale;  // 1 / std, 1 for constant dimensions

  static Standardizer fit(const RowMatrix& rows);
  void apply(RowMatrix& rows) const;
  Vector apply(const Vector& x) const;
};

// Per-dimension standardization with statistics from the train split.
Standardizer standardize_dataset(Dataset& dataset);

// Augments the raw clip, recomputes the log-mel spectrogram, flattens it and
// (optionally) standardizes.
class AudioFeatureAugmenter final : public FeatureAugmenter {
 public:
  AudioFeatureAugmenter(std::vector<audio::AudioClip> clips, audio::AugmentationConfig cfg,
                        std::optional<Standardizer> standardizer);
  bool enabled() const override { return cfg_.apply_prob > 0.0; }
  Vector augmented(SampleIndex sample, std::uint64_t seed) const override;

 private:
  std::vector<audio::AudioClip> clips_;
  audio::AugmentationConfig cfg_;
  std::optional<Standardizer> standardizer_;
};

// Loads every sample's audio (after the same 1 s / 16 kHz normalization as ingest).
std::vector<audio::AudioClip> load_dataset_clips(const Dataset& dataset);

}  // namespace bal
