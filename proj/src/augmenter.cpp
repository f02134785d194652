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

#include "bal/augmenter.hpp"

#include "bal/random.hpp"

namespace bal {

GaussianJitterAugmenter::GaussianJitterAugmenter(const RowMatrix& features, double sigma, double apply_prob)
    : features_(&features), sigma_(sigma), apply_prob_(apply_prob) {
  if (sigma < 0.0) throw InvalidArgument("GaussianJitterAugmenter: sigma must be non-negative");
  if (!(apply_prob >= 0.0 && apply_prob <= 1.0)) throw InvalidArgument("GaussianJitterAugmenter: apply_prob outside [0,1]");
}

Vector GaussianJitterAugmenter::augmented(SampleIndex sample, std::uint64_t seed) const {
  Vector x = features_->row(static_cast<Eigen::Index>(sample)).transpose();
  if (!enabled()) return x;
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) >= apply_prob_) return x;
  std::normal_distribution<double> normal(0.0, sigma_);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += normal(rng);
  return x;
}

}  // namespace bal
