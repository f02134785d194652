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

// Random small selection instances and a dense explicit-Hessian replay of the
// greedy bilevel selector.

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bal/acquisition.hpp"
#include "bal/nystrom.hpp"
#include "oracles.hpp"

namespace oracle {

struct SelectionInstance {
  bal::RowMatrix features;
  bal::NystromMap nm;
  bal::PoolState state;
  int classes = 0;
};

// n points in d dims, the first `labeled` of them labeled (every class present),
// the rest pooled with random soft pseudo-labels; m landmarks from all points.
inline SelectionInstance random_instance(std::uint64_t seed, Eigen::Index n, Eigen::Index d, std::size_t m,
                                         int classes, std::size_t labeled) {
  std::mt19937_64 rng(seed);
  SelectionInstance inst;
  inst.classes = classes;
  inst.features = random_rows(n, d, rng);
  inst.nm = bal::build_nystrom(bal::KernelSpec::rbf(0.5), inst.features, m, seed + 1);
  for (std::size_t i = 0; i < labeled; ++i) {
    inst.state.train.push_back(i);
    inst.state.train_labels.push_back(static_cast<int>(i % static_cast<std::size_t>(classes)));
  }
  for (auto i = static_cast<bal::SampleIndex>(labeled); i < static_cast<bal::SampleIndex>(n); ++i)
    inst.state.pool.push_back(i);
  inst.state.pseudo_labels = random_simplex_rows(static_cast<Eigen::Index>(inst.state.pool.size()), classes, rng);
  return inst;
}

struct ReplayReport {
  std::size_t steps = 0;
  std::size_t matches = 0;
  double worst_direction_error = 0.0;  // CG solution vs dense solve, relative
  std::string first_mismatch;
};

// Re-derives every greedy choice from the recorded weights with a dense solve.
inline ReplayReport replay_with_dense_oracle(const SelectionInstance& inst, const bal::SelectionConfig& cfg,
                                             const bal::SelectionResult& result) {
  using namespace bal;
  const int c = inst.classes;
  auto rows = [&](const std::vector<SampleIndex>& ids) {
    RowMatrix X(static_cast<Eigen::Index>(ids.size()), inst.features.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = inst.features.row(static_cast<Eigen::Index>(ids[i]));
    return map_features_rows(inst.nm, X);
  };
  const RowMatrix Zt = rows(inst.state.train), Zp = rows(inst.state.pool);
  const TermSet labeled(Zt, TermSet::one_hot(inst.state.train_labels, c));
  const TermSet upper = TermSet::concat(labeled, TermSet(Zp, inst.state.pseudo_labels));

  ReplayReport rep;
  TermSet inner = labeled;
  std::set<SampleIndex> taken;
  for (const auto& step : result.trace) {
    const Matrix& w = step.w;
    const Matrix H = dense_hessian(inner, cfg.lambda, w);
    const Vector v = H.ldlt().solve(flatten(gradient(upper, 0.0, w)));
    rep.worst_direction_error = std::max(rep.worst_direction_error, rel_err(flatten(step.v), v));

    std::vector<Eigen::Index> cand;
    for (std::size_t i = 0; i < inst.state.pool.size(); ++i)
      if (!taken.count(inst.state.pool[i])) cand.push_back(static_cast<Eigen::Index>(i));
    RowMatrix Zc(static_cast<Eigen::Index>(cand.size()), Zp.cols()), Pc(static_cast<Eigen::Index>(cand.size()), c);
    for (std::size_t k = 0; k < cand.size(); ++k) {
      Zc.row(static_cast<Eigen::Index>(k)) = Zp.row(cand[k]);
      Pc.row(static_cast<Eigen::Index>(k)) = inst.state.pseudo_labels.row(cand[k]);
    }
    const Vector s = cfg.score_sign * dense_scores(inner, cfg.lambda, upper, w, Zc, Pc);
    std::size_t best = 0;
    for (std::size_t k = 1; k < cand.size(); ++k)
      if (s[static_cast<Eigen::Index>(k)] > s[static_cast<Eigen::Index>(best)]) best = k;
    const SampleIndex expected = inst.state.pool[static_cast<std::size_t>(cand[best])];
    ++rep.steps;
    if (expected == step.chosen) {
      ++rep.matches;
    } else if (rep.first_mismatch.empty()) {
      rep.first_mismatch = "step " + std::to_string(step.step) + ": selector " + std::to_string(step.chosen) +
                           ", oracle " + std::to_string(expected);
    }
    // Continue along the selector's path so later steps compare like with like.
    const auto r = static_cast<Eigen::Index>(std::find(inst.state.pool.begin(), inst.state.pool.end(), step.chosen) -
                                             inst.state.pool.begin());
    inner = TermSet::concat(inner, TermSet(Zp.row(r), inst.state.pseudo_labels.row(r)));
    taken.insert(step.chosen);
  }
  return rep;
}

}  // namespace oracle
