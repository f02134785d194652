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
#include <string>
#include <unordered_map>
#include <vector>

#include "bal/augmenter.hpp"
#include "bal/common.hpp"
#include "bal/nystrom.hpp"
#include "bal/proxy.hpp"
#include "bal/ssl.hpp"

namespace bal {

// Labeled set, unlabeled pool with soft pseudo-labels, and the batch being built.
// Sample indices refer to rows of the dataset feature matrix.
struct PoolState {
  std::vector<SampleIndex> train;
  std::vector<int> train_labels;
  std::vector<SampleIndex> pool;
  RowMatrix pseudo_labels;  // pool.size() x c, row i belongs to pool[i]; empty until pseudo-labeled
  std::vector<SampleIndex> batch;

  // Throws on overlap between train and pool, duplicates, or B not within pool.
  void validate() const;
  bool has_pseudo_labels() const { return pseudo_labels.rows() == static_cast<Eigen::Index>(pool.size()) && !pool.empty(); }
};

enum class AugmentPath { cached, literal };

struct SelectionConfig {
  std::size_t b = 10;
  int nr_it = 1000;
  std::size_t batch_size = 64;
  double lambda = kDefaultRidge;
  int cg_steps = kDefaultCgSteps;
  std::size_t m = 2000;
  double random_fraction = 0.10;
  std::uint64_t seed = 0;

  bool warm_start = true;      // keep w across greedy additions; false re-initializes each step
  double score_sign = 1.0;     // -1 flips the selection direction (ablation)
  AdamConfig adam;
  AugmentPath augment_path = AugmentPath::cached;
  std::size_t cached_variants = 8;
  bool keep_weights = false;   // store w and v of every greedy step in the trace

  void validate() const;
};

// Read-only data shared by every selector.
struct SelectionInputs {
  const RowMatrix* features = nullptr;          // all samples, kernel-input space
  const FeatureAugmenter* augmenter = nullptr;  // null: no augmentation
  int classes = 0;
};

struct SelectionStep {
  std::size_t step = 0;
  SampleIndex chosen = 0;
  double score = 0.0;
  double cg_residual = 0.0;
  int cg_iterations = 0;
  Matrix w;  // only with keep_weights
  Matrix v;  // only with keep_weights
};

struct SelectionResult {
  std::vector<SampleIndex> batch;        // selection order
  std::vector<SelectionStep> trace;      // one entry per greedy step
  std::vector<SampleIndex> random_part;  // mixed strategy only
};

// v = H^{-1} grad G by CG with H the inner Hessian at w.
CgResult selection_direction(const Matrix& w, const Objective& inner, const Objective& upper, int cg_steps);

// <grad_w CE(h_w(z), pseudo), H^{-1} grad G(w)>_F with all derivatives at w.
double selection_score(const Eigen::Ref<const Vector>& z, const Eigen::Ref<const Vector>& pseudo, const Matrix& w,
                       const Objective& inner, const Objective& upper, int cg_steps = kDefaultCgSteps);

// Greedy bilevel batch: retrain the proxy on D_train u B, score the remaining
// pool, add the argmax (lowest index on ties); b times.
SelectionResult select_batch_bilevel(const PoolState& state, const SelectionConfig& cfg, const NystromMap& nm,
                                     const SelectionInputs& inputs);

// round_half_up(b (1 - random_fraction)) bilevel picks, the rest uniform from the remaining pool.
SelectionResult select_batch_mixed(const PoolState& state, const SelectionConfig& cfg, const NystromMap& nm,
                                   const SelectionInputs& inputs);
std::size_t bilevel_share(std::size_t b, double random_fraction);

std::vector<SampleIndex> select_uniform(const PoolState& state, std::size_t b, std::uint64_t seed);

double entropy(const Eigen::Ref<const Eigen::RowVectorXd>& p);

// Entropy of the variant-averaged prediction, per row; `variants` holds one
// (pool x c) prediction matrix per augmented variant.
Vector entropy_scores(const std::vector<RowMatrix>& variants);
// Mean over classes of the per-class population variance across variants, per row.
Vector consistency_scores(const std::vector<RowMatrix>& variants);

// Top-b by entropy of predictions averaged over n_aug augmented variants.
std::vector<SampleIndex> select_max_entropy(const PoolState& state, const SslModel& model, std::size_t b,
                                            const SelectionInputs& inputs, std::size_t n_aug = 2,
                                            std::uint64_t seed = 0);

// Top-b by mean over classes of the per-class prediction variance across n_aug variants.
std::vector<SampleIndex> select_consistency(const PoolState& state, const SslModel& model, std::size_t b,
                                            const SelectionInputs& inputs, std::size_t n_aug = 5,
                                            std::uint64_t seed = 0);

// Top-b of `scores` (aligned with `ids`), descending, lowest id on ties.
std::vector<SampleIndex> top_b(const std::vector<SampleIndex>& ids, const Vector& scores, std::size_t b);

using EmbeddingMap = std::unordered_map<SampleIndex, Vector>;

// Farthest-first traversal seeded with the labeled points as centers.
std::vector<SampleIndex> select_kcenter(const PoolState& state, const EmbeddingMap& embeddings, std::size_t b);

}  // namespace bal
