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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bal/acquisition.hpp"
#include "bal/audio.hpp"
#include "bal/dataset.hpp"
#include "bal/kernel.hpp"
#include "bal/ssl.hpp"

namespace bal {

enum class Strategy { uniform, max_entropy, kcenter, consistency, bilevel, bilevel_mixed };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);
const std::vector<Strategy>& all_strategies();

enum class OracleKind { simulated, service };

std::string to_string(OracleKind k);

// Where the samples come from. Exactly one of `name`, `cache`, `synthetic` is set:
// `name` refers to a dataset registered with the session service, `cache` is a
// feature-cache prefix, `synthetic` generates Gaussian clusters.
struct DatasetRef {
  std::string name;
  std::string cache;
  std::optional<GaussianClustersConfig> synthetic;

  std::string describe() const;
};

struct FieldError {
  std::string field;
  std::string message;
};

class ConfigError : public InvalidArgument {
 public:
  explicit ConfigError(std::vector<FieldError> errors);
  const std::vector<FieldError>& errors() const { return errors_; }

 private:
  std::vector<FieldError> errors_;
};

struct CampaignConfig {
  DatasetRef dataset;
  bool standardize = false;
  Strategy strategy = Strategy::bilevel_mixed;
  std::size_t start_labels = 10;
  std::size_t end_labels = 60;
  std::size_t b = 10;
  std::vector<std::uint64_t> seeds{0};
  std::size_t warmup_labels = 0;  // uniform selection until this many labels

  // Selection. `kernel.rbf_gamma` <= 0 means the nearest-neighbour median
  // heuristic over the current train + pool features.
  SelectionConfig selection;
  KernelSpec kernel = KernelSpec::relu_ntk(3);
  std::size_t entropy_augmentations = 2;
  std::size_t consistency_augmentations = 5;

  // Semi-supervised learner retrained every round.
  SslKind ssl = SslKind::label_propagation;
  double ssl_alpha = 0.99;
  double ssl_gamma = 0.0;  // <= 0: median heuristic
  double ssl_tolerance = 1e-6;
  int ssl_max_iterations = 1000;

  // Audio datasets use the clip augmentations; vector datasets use Gaussian
  // jitter with std `feature_jitter` (0 disables augmentation).
  audio::AugmentationConfig augmentation;
  std::vector<std::string> noise_bank;  // WAV paths
  double feature_jitter = 0.0;

  OracleKind oracle = OracleKind::simulated;
  std::string checkpoint_dir;  // empty: no checkpoints

  std::size_t rounds() const { return b == 0 ? 0 : (end_labels - start_labels) / b; }
};

// Field-level checks that do not need the dataset.
std::vector<FieldError> validate_config(const CampaignConfig& cfg);
// Checks against a loaded dataset (class count, pool size).
std::vector<FieldError> validate_config(const CampaignConfig& cfg, const Dataset& dataset);

// Parses the JSON schema documented in the README. Unknown keys and type errors
// are reported per field; throws ConfigError listing every problem found.
CampaignConfig parse_campaign_config(const nlohmann::json& j);
CampaignConfig read_campaign_config(const std::filesystem::path& path);
nlohmann::json to_json(const CampaignConfig& cfg);

// Resolves `cache` and `synthetic` references (relative cache paths against
// `base`). Standardization is applied by the campaign, not here.
Dataset load_dataset(const CampaignConfig& cfg, const std::filesystem::path& base = {});

}  // namespace bal
