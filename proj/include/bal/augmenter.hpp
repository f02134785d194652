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

#include "bal/common.hpp"

namespace bal {

// Produces a stochastic variant of a sample's kernel-input features.
class FeatureAugmenter {
 public:
  virtual ~FeatureAugmenter() = default;

  virtual bool enabled() const = 0;
  // Deterministic in (sample, seed). Returns the clean features when disabled.
  virtual Vector augmented(SampleIndex sample, std::uint64_t seed) const = 0;
};

// Returns the clean feature rows unchanged.
class IdentityAugmenter final : public FeatureAugmenter {
 public:
  explicit IdentityAugmenter(const RowMatrix& features) : features_(&features) {}
  bool enabled() const override { return false; }
  Vector augmented(SampleIndex sample, std::uint64_t) const override {
    return features_->row(static_cast<Eigen::Index>(sample)).transpose();
  }

 private:
  const RowMatrix* features_;
};

// Isotropic Gaussian jitter; the vector-data analogue of the audio augmentations.
class GaussianJitterAugmenter final : public FeatureAugmenter {
 public:
  GaussianJitterAugmenter(const RowMatrix& features, double sigma, double apply_prob = 1.0);
  bool enabled() const override { return sigma_ > 0.0 && apply_prob_ > 0.0; }
  Vector augmented(SampleIndex sample, std::uint64_t seed) const override;

 private:
  const RowMatrix* features_;
  double sigma_;
  double apply_prob_;
};

}  // namespace bal
