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

#include "bal/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "bal/parallel_kernels.hpp"
#include "bal/random.hpp"

namespace bal {

void PoolState::validate() const {
  if (train.size() != train_labels.size()) throw InvalidArgument("PoolState: train ids and labels differ in count");
  std::set<SampleIndex> train_set(train.begin(), train.end());
  if (train_set.size() != train.size()) throw InvalidArgument("PoolState: duplicate id in D_train");
  std::set<SampleIndex> pool_set(pool.begin(), pool.end());
  if (pool_set.size() != pool.size()) throw InvalidArgument("PoolState: duplicate id in D_pool");
  for (auto id : pool)
    if (train_set.count(id)) throw InvalidArgument("PoolState: id " + std::to_string(id) + " in both D_train and D_pool");
  std::set<SampleIndex> batch_set;
  for (auto id : batch) {
    if (!pool_set.count(id)) throw InvalidArgument("PoolState: batch id " + std::to_string(id) + " not in D_pool");
    if (!batch_set.insert(id).second) throw InvalidArgument("PoolState: duplicate batch id " + std::to_string(id));
  }
  if (pseudo_labels.rows() != 0 && pseudo_labels.rows() != static_cast<Eigen::Index>(pool.size()))
    throw InvalidArgument("PoolState: pseudo-label rows do not match pool size");
}

void SelectionConfig::validate() const {
  if (b < 1) throw InvalidArgument("SelectionConfig: b must be at least 1");
  if (!(random_fraction >= 0.0 && random_fraction <= 1.0))
    throw InvalidArgument("SelectionConfig: random_fraction must lie in [0,1]");
  if (!(lambda > 0.0)) throw InvalidArgument("SelectionConfig: lambda must be positive");
  if (cg_steps < 1) throw InvalidArgument("SelectionConfig: cg_steps must be positive");
  if (m < 1) throw InvalidArgument("SelectionConfig: m must be positive");
  if (nr_it < 0) throw InvalidArgument("SelectionConfig: nr_it must be non-negative");
  if (batch_size < 1) throw InvalidArgument("SelectionConfig: batch_size must be positive");
  if (score_sign != 1.0 && score_sign != -1.0) throw InvalidArgument("SelectionConfig: score_sign must be +1 or -1");
}

CgResult selection_direction(const Matrix& w, const Objective& inner, const Objective& upper, int cg_steps) {
  const Matrix g = objective_grad(upper, w);
  return cg_solve([&](const Matrix& v) { return hvp(inner, w, v); }, g, cg_steps);
}

double selection_score(const Eigen::Ref<const Vector>& z, const Eigen::Ref<const Vector>& pseudo, const Matrix& w,
                       const Objective& inner, const Objective& upper, int cg_steps) {
  const CgResult dir = selection_direction(w, inner, upper, cg_steps);
  const Matrix grad_x = z * (predict(w, z) - pseudo).transpose();
  return (grad_x.array() * dir.solution.array()).sum();
}

namespace {

void require_pool(const PoolState& state, std::size_t b) {
  if (state.pool.size() < b)
    throw InvalidArgument("selection: pool holds " + std::to_string(state.pool.size()) + " samples, batch needs " +
                          std::to_string(b));
}

RowMatrix gather(const RowMatrix& X, const std::vector<SampleIndex>& ids) {
  RowMatrix out(static_cast<Eigen::Index>(ids.size()), X.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= static_cast<SampleIndex>(X.rows())) throw InvalidArgument("selection: sample index out of range");
    out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(ids[i]));
  }
  return out;
}

RowMatrix gather_rows(const RowMatrix& X, const std::vector<Eigen::Index>& rows) {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
  return out;
}

// Augmented-variant predictions for every pool point: n_aug blocks of pool.size() rows.
std::vector<RowMatrix> variant_predictions(const PoolState& state, const SslModel& model, const SelectionInputs& inputs,
                                           std::size_t n_aug, std::uint64_t seed) {
  if (!inputs.features) throw InvalidArgument("selection: inputs.features is null");
  const RowMatrix clean = gather(*inputs.features, state.pool);
  const bool augment = inputs.augmenter && inputs.augmenter->enabled();
  std::vector<RowMatrix> out;
  out.reserve(n_aug);
  RowMatrix clean_pred;
  for (std::size_t k = 0; k < n_aug; ++k) {
    if (!augment) {
      if (clean_pred.size() == 0) clean_pred = model.predict(clean);
      out.push_back(clean_pred);
      continue;
    }
    RowMatrix X(clean.rows(), clean.cols());
    for (std::size_t i = 0; i < state.pool.size(); ++i)
      X.row(static_cast<Eigen::Index>(i)) =
          inputs.augmenter->augmented(state.pool[i], derive_seed(seed, {state.pool[i], k})).transpose();
    out.push_back(model.predict(X));
  }
  return out;
}

}  // namespace

std::vector<SampleIndex> top_b(const std::vector<SampleIndex>& ids, const Vector& scores, std::size_t b) {
  if (static_cast<Eigen::Index>(ids.size()) != scores.size()) throw InvalidArgument("top_b: ids and scores differ");
  if (b > ids.size()) throw InvalidArgument("top_b: b exceeds candidate count");
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
    const double sa = scores[static_cast<Eigen::Index>(a)], sc = scores[static_cast<Eigen::Index>(c)];
    if (sa != sc) return sa > sc;
    return ids[a] < ids[c];
  });
  std::vector<SampleIndex> out;
  out.reserve(b);
  for (std::size_t i = 0; i < b; ++i) out.push_back(ids[order[i]]);
  return out;
}

SelectionResult select_batch_bilevel(const PoolState& state, const SelectionConfig& cfg, const NystromMap& nm,
                                     const SelectionInputs& inputs) {
  cfg.validate();
  state.validate();
  require_pool(state, cfg.b + state.batch.size());
  if (!state.has_pseudo_labels()) throw InvalidArgument("select_batch_bilevel: pool has no pseudo-labels");
  if (!inputs.features) throw InvalidArgument("select_batch_bilevel: inputs.features is null");
  const int c = inputs.classes;
  if (c < 1 || state.pseudo_labels.cols() != c) throw InvalidArgument("select_batch_bilevel: class count mismatch");

  const Eigen::Index m = nm.m();
  const RowMatrix Z_train = map_features_rows(nm, gather(*inputs.features, state.train));
  const RowMatrix Z_pool = map_features_rows(nm, gather(*inputs.features, state.pool));
  const TermSet labeled(Z_train, TermSet::one_hot(state.train_labels, c));
  const Objective upper = make_upper_objective(labeled, TermSet(Z_pool, state.pseudo_labels));

  std::unordered_map<SampleIndex, Eigen::Index> pool_row;
  for (std::size_t i = 0; i < state.pool.size(); ++i) pool_row[state.pool[i]] = static_cast<Eigen::Index>(i);

  // Inner-objective terms: D_train with true labels, then B with pseudo-labels.
  std::vector<SampleIndex> term_samples = state.train;
  TermSet inner_terms = labeled;
  std::vector<RowMatrix> variant_blocks;
  const bool augment = inputs.augmenter && inputs.augmenter->enabled();
  const bool cached = augment && cfg.augment_path == AugmentPath::cached;
  auto add_variants = [&](SampleIndex sample) {
    if (!cached) return;
    RowMatrix raw(static_cast<Eigen::Index>(cfg.cached_variants), nm.input_dim());
    for (std::size_t k = 0; k < cfg.cached_variants; ++k)
      raw.row(static_cast<Eigen::Index>(k)) =
          inputs.augmenter->augmented(sample, derive_seed(cfg.seed, {0xA06, sample, k})).transpose();
    variant_blocks.push_back(map_features_rows(nm, raw));
  };
  for (auto id : state.train) add_variants(id);

  std::vector<SampleIndex> batch = state.batch;
  std::set<SampleIndex> taken(batch.begin(), batch.end());
  auto add_to_inner = [&](SampleIndex id) {
    const Eigen::Index r = pool_row.at(id);
    inner_terms = TermSet::concat(inner_terms, TermSet(Z_pool.row(r), state.pseudo_labels.row(r)));
    term_samples.push_back(id);
    add_variants(id);
  };
  for (auto id : batch) add_to_inner(id);

  const std::uint64_t init_seed = derive_seed(cfg.seed, {0x1417});
  Matrix w = random_init_weights(m, c, init_seed);
  SelectionResult result;

  for (std::size_t step = 0; step < cfg.b; ++step) {
    if (!cfg.warm_start) w = random_init_weights(m, c, init_seed);
    ProxyTrainConfig train;
    train.iterations = cfg.nr_it;
    train.batch_size = cfg.batch_size;
    train.lambda = cfg.lambda;
    train.adam = cfg.adam;
    train.seed = derive_seed(cfg.seed, {0x7EA1, step});
    if (!augment) {
      w = train_proxy(FixedTermSource(inner_terms), w, train).w;
    } else if (cached) {
      w = train_proxy(CachedVariantSource(inner_terms, variant_blocks), w, train).w;
    } else {
      w = train_proxy(AugmentedTermSource(inner_terms, term_samples, *inputs.augmenter, nm), w, train).w;
    }

    const Objective inner{inner_terms, cfg.lambda};
    const CgResult dir = selection_direction(w, inner, upper, cfg.cg_steps);

    std::vector<Eigen::Index> cand_rows;
    std::vector<SampleIndex> cand_ids;
    for (std::size_t i = 0; i < state.pool.size(); ++i) {
      if (taken.count(state.pool[i])) continue;
      cand_rows.push_back(static_cast<Eigen::Index>(i));
      cand_ids.push_back(state.pool[i]);
    }
    const Vector scores = kernels::bilevel_scores(gather_rows(Z_pool, cand_rows), w,
                                                  gather_rows(state.pseudo_labels, cand_rows), dir.solution,
                                                  cfg.score_sign);
    std::size_t best = 0;
    for (std::size_t k = 1; k < cand_ids.size(); ++k) {
      const double s = scores[static_cast<Eigen::Index>(k)], sb = scores[static_cast<Eigen::Index>(best)];
      if (s > sb || (s == sb && cand_ids[k] < cand_ids[best])) best = k;
    }
    if (!std::isfinite(scores[static_cast<Eigen::Index>(best)]))
      throw NumericalError("select_batch_bilevel: non-finite selection score at step " + std::to_string(step));

    SelectionStep rec;
    rec.step = step;
    rec.chosen = cand_ids[best];
    rec.score = scores[static_cast<Eigen::Index>(best)];
    rec.cg_residual = dir.relative_residual;
    rec.cg_iterations = dir.iterations;
    if (cfg.keep_weights) {
      rec.w = w;
      rec.v = dir.solution;
    }
    result.trace.push_back(std::move(rec));
    result.batch.push_back(cand_ids[best]);
    taken.insert(cand_ids[best]);
    add_to_inner(cand_ids[best]);
  }
  return result;
}

std::size_t bilevel_share(std::size_t b, double random_fraction) {
  const double x = static_cast<double>(b) * (1.0 - random_fraction);
  return std::min(b, static_cast<std::size_t>(std::floor(x + 0.5)));
}

SelectionResult select_batch_mixed(const PoolState& state, const SelectionConfig& cfg, const NystromMap& nm,
                                   const SelectionInputs& inputs) {
  cfg.validate();
  require_pool(state, cfg.b);
  const std::size_t n_bilevel = bilevel_share(cfg.b, cfg.random_fraction);
  SelectionResult result;
  if (n_bilevel > 0) {
    SelectionConfig sub = cfg;
    sub.b = n_bilevel;
    result = select_batch_bilevel(state, sub, nm, inputs);
  }
  const std::size_t n_random = cfg.b - n_bilevel;
  if (n_random > 0) {
    std::set<SampleIndex> taken(result.batch.begin(), result.batch.end());
    taken.insert(state.batch.begin(), state.batch.end());
    std::vector<SampleIndex> rest;
    for (auto id : state.pool)
      if (!taken.count(id)) rest.push_back(id);
    Rng rng(derive_seed(cfg.seed, {0x5A11}));
    result.random_part = sample_without_replacement(rest, n_random, rng);
    result.batch.insert(result.batch.end(), result.random_part.begin(), result.random_part.end());
  }
  return result;
}

std::vector<SampleIndex> select_uniform(const PoolState& state, std::size_t b, std::uint64_t seed) {
  require_pool(state, b);
  Rng rng(seed);
  return sample_without_replacement(state.pool, b, rng);
}

double entropy(const Eigen::Ref<const Eigen::RowVectorXd>& p) {
  double h = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k)
    if (p[k] > 0.0) h -= p[k] * std::log(p[k]);
  return h;
}

Vector entropy_scores(const std::vector<RowMatrix>& variants) {
  if (variants.empty()) throw InvalidArgument("entropy_scores: no variants");
  RowMatrix mean = RowMatrix::Zero(variants[0].rows(), variants[0].cols());
  for (const auto& p : variants) mean += p;
  mean /= static_cast<double>(variants.size());
  Vector scores(mean.rows());
  for (Eigen::Index i = 0; i < mean.rows(); ++i) scores[i] = entropy(mean.row(i));
  return scores;
}

Vector consistency_scores(const std::vector<RowMatrix>& variants) {
  if (variants.empty()) throw InvalidArgument("consistency_scores: no variants");
  const double n = static_cast<double>(variants.size());
  // Deviations from the first variant: identical variants give exactly zero.
  const RowMatrix& ref = variants[0];
  RowMatrix s1 = RowMatrix::Zero(ref.rows(), ref.cols()), s2 = s1;
  for (const auto& p : variants) {
    const RowMatrix d = p - ref;
    s1 += d;
    s2 += d.cwiseAbs2();
  }
  s1 /= n;
  const RowMatrix var = (s2 / n - s1.cwiseAbs2()).cwiseMax(0.0);
  return var.rowwise().mean();
}

std::vector<SampleIndex> select_max_entropy(const PoolState& state, const SslModel& model, std::size_t b,
                                            const SelectionInputs& inputs, std::size_t n_aug, std::uint64_t seed) {
  require_pool(state, b);
  if (n_aug == 0) throw InvalidArgument("select_max_entropy: n_aug must be positive");
  return top_b(state.pool, entropy_scores(variant_predictions(state, model, inputs, n_aug, seed)), b);
}

std::vector<SampleIndex> select_consistency(const PoolState& state, const SslModel& model, std::size_t b,
                                            const SelectionInputs& inputs, std::size_t n_aug, std::uint64_t seed) {
  require_pool(state, b);
  if (n_aug == 0) throw InvalidArgument("select_consistency: n_aug must be positive");
  return top_b(state.pool, consistency_scores(variant_predictions(state, model, inputs, n_aug, seed)), b);
}

std::vector<SampleIndex> select_kcenter(const PoolState& state, const EmbeddingMap& embeddings, std::size_t b) {
  require_pool(state, b);
  auto lookup = [&](SampleIndex id) -> const Vector& {
    auto it = embeddings.find(id);
    if (it == embeddings.end()) throw InvalidArgument("select_kcenter: missing embedding for sample " + std::to_string(id));
    return it->second;
  };
  std::vector<SampleIndex> ids = state.pool;
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) return {};
  const Eigen::Index dim = lookup(ids[0]).size();
  RowMatrix E(static_cast<Eigen::Index>(ids.size()), dim);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Vector& e = lookup(ids[i]);
    if (e.size() != dim) throw InvalidArgument("select_kcenter: embedding dimensions differ");
    E.row(static_cast<Eigen::Index>(i)) = e.transpose();
  }
  Vector min_d = Vector::Constant(E.rows(), std::numeric_limits<double>::infinity());
  for (auto id : state.train) {
    const Vector& e = lookup(id);
    if (e.size() != dim) throw InvalidArgument("select_kcenter: embedding dimensions differ");
    kernels::relax_min_distance(E, e, min_d);
  }
  std::vector<bool> chosen(ids.size(), false);
  std::vector<SampleIndex> out;
  for (std::size_t step = 0; step < b; ++step) {
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < E.rows(); ++i) {
      if (chosen[static_cast<std::size_t>(i)]) continue;
      if (best < 0 || min_d[i] > min_d[best]) best = i;  // ids sorted ascending: first max wins
    }
    chosen[static_cast<std::size_t>(best)] = true;
    out.push_back(ids[static_cast<std::size_t>(best)]);
    kernels::relax_min_distance(E, E.row(best).transpose(), min_d);
  }
  return out;
}

}  // namespace bal
