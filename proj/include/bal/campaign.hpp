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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bal/acquisition.hpp"
#include "bal/config.hpp"
#include "bal/dataset.hpp"
#include "bal/ssl.hpp"

namespace bal {

struct RoundLog {
  std::size_t round = 0;
  std::size_t labeled = 0;
  double test_accuracy = 0.0;
  double pseudo_label_accuracy = 0.0;  // SSL argmax vs truth on the remaining pool; NaN if unknown
  std::vector<std::string> selected;   // ids queried to reach this round, selection order
  std::vector<SelectionStep> trace;    // greedy steps of the bilevel selector (weights dropped)
  double wall_time_ms = 0.0;           // not part of the reproducible round log
};

struct SeedLog {
  Strategy strategy = Strategy::uniform;
  std::uint64_t seed = 0;
  std::vector<RoundLog> rounds;
};

struct RoundSummary {
  std::size_t round = 0;
  std::size_t labeled = 0;
  double mean = 0.0;  // test accuracy
  double std = 0.0;   // population standard deviation over seeds
  double pseudo_mean = 0.0;
  double pseudo_std = 0.0;
  std::size_t seeds = 0;
};

struct ExperimentResult {
  Strategy strategy = Strategy::uniform;
  std::vector<SeedLog> seeds;
  std::vector<RoundSummary> summary;

  double final_mean() const { return summary.empty() ? 0.0 : summary.back().mean; }
  double final_std() const { return summary.empty() ? 0.0 : summary.back().std; }
};

// Mean and population std per round; every seed must cover the same rounds.
std::vector<RoundSummary> aggregate(const std::vector<SeedLog>& seeds);

// Stratified seeding over labeled train-split samples: one random sample per
// class, then uniform. Every other train-split sample forms the pool.
PoolState seed_initial_pool(const Dataset& dataset, std::size_t start_labels, std::uint64_t seed);

// Label source for queried batches; nullopt aborts the campaign.
class LabelOracle {
 public:
  virtual ~LabelOracle() = default;
  virtual std::optional<std::vector<int>> labels(const Dataset& dataset, const std::vector<SampleIndex>& batch) = 0;
};

// Ground-truth lookup.
class SimulatedOracle final : public LabelOracle {
 public:
  std::optional<std::vector<int>> labels(const Dataset& dataset, const std::vector<SampleIndex>& batch) override;
};

class CampaignAborted : public Error {
 public:
  CampaignAborted(const std::string& what, std::filesystem::path checkpoint)
      : Error(what), checkpoint_(std::move(checkpoint)) {}
  const std::filesystem::path& checkpoint() const { return checkpoint_; }

 private:
  std::filesystem::path checkpoint_;
};

// One seed of a campaign, advanced step by step:
//
//   start()   seeds the labeled pool, trains the SSL model, logs round 0
//   propose() pseudo-labels the pool and selects the next batch
//   commit()  moves the labeled batch into D_train, retrains, logs the round
class Campaign {
 public:
  Campaign(CampaignConfig cfg, std::shared_ptr<const Dataset> dataset, std::uint64_t seed);

  void start();
  bool started() const { return !logs_.empty(); }
  bool finished() const;
  std::size_t round() const { return logs_.empty() ? 0 : logs_.back().round; }

  // Selects the next batch; repeated calls return the same pending batch.
  const std::vector<SampleIndex>& propose();
  const std::vector<SampleIndex>& pending() const { return pending_; }
  // `labels` aligned with pending().
  void commit(const std::vector<int>& labels);

  const CampaignConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  const Dataset& dataset() const { return *dataset_; }
  const RowMatrix& features() const { return *features_; }
  const PoolState& state() const { return state_; }
  const std::vector<RoundLog>& logs() const { return logs_; }
  SeedLog seed_log() const;

  // Writes `dir`/state.json, train.bin (index, label) and pool.bin (index).
  void save_checkpoint(const std::filesystem::path& dir) const;
  static Campaign restore(const std::filesystem::path& dir, std::shared_ptr<const Dataset> dataset);

 private:
  void retrain();
  RoundLog evaluate_round(std::size_t round) const;
  RowMatrix rows_of(const std::vector<SampleIndex>& ids) const;
  NystromMap round_nystrom() const;
  std::uint64_t round_seed(std::uint64_t tag) const;

  CampaignConfig cfg_;
  std::shared_ptr<const Dataset> dataset_;
  std::uint64_t seed_ = 0;
  std::shared_ptr<RowMatrix> features_;
  std::unique_ptr<FeatureAugmenter> augmenter_;
  std::optional<SslModel> model_;
  PoolState state_;
  std::vector<SampleIndex> pending_;
  std::vector<SelectionStep> pending_trace_;
  double pending_ms_ = 0.0;
  std::vector<RoundLog> logs_;
};

struct RunOptions {
  bool resume = false;  // continue from checkpoints in cfg.checkpoint_dir
};

std::filesystem::path seed_checkpoint_dir(const CampaignConfig& cfg, std::uint64_t seed);

// Runs every seed of the campaign with the given oracle (simulated when null).
// Checkpoints after every round when cfg.checkpoint_dir is set; an oracle abort
// checkpoints and throws CampaignAborted.
ExperimentResult run_campaign(const CampaignConfig& cfg, std::shared_ptr<const Dataset> dataset,
                              LabelOracle* oracle = nullptr, const RunOptions& options = {});

}  // namespace bal
