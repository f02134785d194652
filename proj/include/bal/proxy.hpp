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
#include <functional>
#include <memory>
#include <vector>

#include "bal/augmenter.hpp"
#include "bal/common.hpp"
#include "bal/nystrom.hpp"
#include "bal/random.hpp"

namespace bal {

inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr double kDefaultRidge = 1e-4;

// Softmax-linear predictor h_w(z) = softmax(w^T z) over Nyström features.
struct ProxyModel {
  Matrix w;  // m x c
  double lambda = kDefaultRidge;
  std::uint64_t seed = 0;

  Eigen::Index features() const { return w.rows(); }
  Eigen::Index classes() const { return w.cols(); }
};

Vector predict(const Matrix& w, const Eigen::Ref<const Vector>& z);
inline Vector predict(const ProxyModel& model, const Eigen::Ref<const Vector>& z) { return predict(model.w, z); }

// Weighted cross-entropy terms (z_i, t_i, a_i); targets are distributions.
struct TermSet {
  RowMatrix features;  // k x m
  RowMatrix targets;   // k x c
  Vector weights;      // k

  TermSet() = default;
  TermSet(RowMatrix z, RowMatrix t);
  TermSet(RowMatrix z, RowMatrix t, Vector a);

  Eigen::Index size() const { return features.rows(); }

  // Throws unless every target row lies on the simplex within 1e-8.
  void validate() const;
  static TermSet concat(const TermSet& a, const TermSet& b);
  static RowMatrix one_hot(const std::vector<int>& labels, int classes);
};

// sum_i a_i * CE(h_w(z_i), t_i) + ridge * |w|_F^2.
struct Objective {
  TermSet terms;
  double ridge = 0.0;
};

// Training loss on labeled terms plus pseudo-labeled batch terms, with weight decay.
Objective make_inner_objective(const TermSet& labeled, const TermSet& pseudo, double lambda);
// Generalization proxy over labeled and pseudo-labeled pool terms, no ridge.
Objective make_upper_objective(const TermSet& labeled, const TermSet& pool);

double objective_value(const Objective& obj, const Matrix& w);
Matrix objective_grad(const Objective& obj, const Matrix& w);
// Exact Hessian action: sum_i a_i z_i ((diag p_i - p_i p_i^T) v^T z_i)^T + 2 ridge v.
Matrix hvp(const Objective& obj, const Matrix& w, const Matrix& v);

using LinearOperator = std::function<Matrix(const Matrix&)>;

struct CgResult {
  Matrix solution;
  int iterations = 0;
  double relative_residual = 0.0;
};

inline constexpr int kDefaultCgSteps = 30;
inline constexpr double kCgTolerance = 1e-10;

// Conjugate gradient on the flattened m*c system under the Frobenius inner product.
// `on_iterate(k, x_k)` sees every iterate.
CgResult cg_solve(const LinearOperator& apply_h, const Matrix& g, int steps = kDefaultCgSteps,
                  double tolerance = kCgTolerance, const std::function<void(int, const Matrix&)>& on_iterate = {});

// ---------------------------------------------------------------- training

// Supplies inner-objective terms to the minibatch trainer.
class TrainingSource {
 public:
  virtual ~TrainingSource() = default;
  virtual std::size_t size() const = 0;
  // Writes the (possibly augmented) features and target of term i.
  virtual void draw(std::size_t i, Rng& rng, Eigen::Ref<Vector> z, Eigen::Ref<Vector> target) const = 0;
  // Augmentation-free terms.
  virtual const TermSet& clean_terms() const = 0;
  double weight(std::size_t i) const { return clean_terms().weights[static_cast<Eigen::Index>(i)]; }
};

class FixedTermSource final : public TrainingSource {
 public:
  explicit FixedTermSource(TermSet terms) : terms_(std::move(terms)) {}
  std::size_t size() const override { return static_cast<std::size_t>(terms_.size()); }
  void draw(std::size_t i, Rng&, Eigen::Ref<Vector> z, Eigen::Ref<Vector> target) const override;
  const TermSet& clean_terms() const override { return terms_; }

 private:
  TermSet terms_;
};

// Augments the raw sample on every draw and maps it through the Nyström map.
class AugmentedTermSource final : public TrainingSource {
 public:
  AugmentedTermSource(TermSet clean, std::vector<SampleIndex> samples, const FeatureAugmenter& augmenter,
                      const NystromMap& nm);
  std::size_t size() const override { return samples_.size(); }
  void draw(std::size_t i, Rng& rng, Eigen::Ref<Vector> z, Eigen::Ref<Vector> target) const override;
  const TermSet& clean_terms() const override { return clean_; }

 private:
  TermSet clean_;
  std::vector<SampleIndex> samples_;
  const FeatureAugmenter* augmenter_;
  const NystromMap* nm_;
};

// Precomputed augmented variants per term (mapped features); one drawn per use.
class CachedVariantSource final : public TrainingSource {
 public:
  CachedVariantSource(TermSet clean, std::vector<RowMatrix> variants);
  // Builds `variants_per_sample` augmented variants for each sample.
  static CachedVariantSource build(TermSet clean, const std::vector<SampleIndex>& samples,
                                   const FeatureAugmenter& augmenter, const NystromMap& nm,
                                   std::size_t variants_per_sample, std::uint64_t seed);
  std::size_t size() const override { return variants_.size(); }
  void draw(std::size_t i, Rng& rng, Eigen::Ref<Vector> z, Eigen::Ref<Vector> target) const override;
  const TermSet& clean_terms() const override { return clean_; }

 private:
  TermSet clean_;
  std::vector<RowMatrix> variants_;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct ProxyTrainConfig {
  int iterations = 1000;
  std::size_t batch_size = 64;
  double lambda = kDefaultRidge;
  AdamConfig adam;
  std::uint64_t seed = 0;
  std::function<void(int, const Matrix&)> on_step;  // called after each update
};

// Adam on the inner objective with minibatches of min(batch_size, N) distinct
// terms; the minibatch loss is rescaled by N/|S| so its gradient is unbiased.
ProxyModel train_proxy(const TrainingSource& source, const Matrix& init_w, const ProxyTrainConfig& cfg);

// Small isotropic Gaussian initialization (std 0.01).
Matrix random_init_weights(Eigen::Index m, Eigen::Index c, std::uint64_t seed);

// Checkpoint: `path` holds w (matrix file), `path`.json holds lambda, m, c, seed.
void save_proxy(const std::filesystem::path& path, const ProxyModel& model);
ProxyModel load_proxy(const std::filesystem::path& path);

}  // namespace bal
