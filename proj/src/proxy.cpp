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

#include "bal/proxy.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "bal/matrix_io.hpp"
#include "bal/softmax.hpp"

namespace bal {

Vector predict(const Matrix& w, const Eigen::Ref<const Vector>& z) {
  if (z.size() != w.rows())
    throw InvalidArgument("predict: feature length " + std::to_string(z.size()) + " does not match model " +
                          std::to_string(w.rows()));
  return softmax(w.transpose() * z);
}

TermSet::TermSet(RowMatrix z, RowMatrix t) : TermSet(std::move(z), std::move(t), Vector()) {}

TermSet::TermSet(RowMatrix z, RowMatrix t, Vector a)
    : features(std::move(z)), targets(std::move(t)), weights(std::move(a)) {
  if (weights.size() == 0) weights = Vector::Ones(features.rows());
  if (features.rows() != targets.rows() || weights.size() != features.rows())
    throw InvalidArgument("TermSet: features, targets and weights must have the same number of rows");
}

void TermSet::validate() const {
  for (Eigen::Index i = 0; i < targets.rows(); ++i) {
    if ((targets.row(i).array() < -1e-8).any() || std::abs(targets.row(i).sum() - 1.0) > 1e-8)
      throw InvalidArgument("TermSet: target row " + std::to_string(i) + " is not on the probability simplex");
  }
  if (!features.allFinite() || !weights.allFinite()) throw InvalidArgument("TermSet: non-finite features or weights");
}

TermSet TermSet::concat(const TermSet& a, const TermSet& b) {
  if (a.size() == 0) return b;
  if (b.size() == 0) return a;
  if (a.features.cols() != b.features.cols() || a.targets.cols() != b.targets.cols())
    throw InvalidArgument("TermSet::concat: shape mismatch");
  RowMatrix z(a.size() + b.size(), a.features.cols());
  RowMatrix t(a.size() + b.size(), a.targets.cols());
  Vector w(a.size() + b.size());
  z << a.features, b.features;
  t << a.targets, b.targets;
  w << a.weights, b.weights;
  return TermSet(std::move(z), std::move(t), std::move(w));
}

RowMatrix TermSet::one_hot(const std::vector<int>& labels, int classes) {
  RowMatrix t = RowMatrix::Zero(static_cast<Eigen::Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes)
      throw InvalidArgument("one_hot: label " + std::to_string(labels[i]) + " outside [0, " + std::to_string(classes) + ")");
    t(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return t;
}

Objective make_inner_objective(const TermSet& labeled, const TermSet& pseudo, double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("inner objective requires lambda > 0");
  Objective obj{TermSet::concat(labeled, pseudo), lambda};
  obj.terms.validate();
  return obj;
}

Objective make_upper_objective(const TermSet& labeled, const TermSet& pool) {
  Objective obj{TermSet::concat(labeled, pool), 0.0};
  obj.terms.validate();
  return obj;
}

namespace {

void check_shapes(const Objective& obj, const Matrix& w) {
  if (obj.terms.size() > 0 && (obj.terms.features.cols() != w.rows() || obj.terms.targets.cols() != w.cols()))
    throw InvalidArgument("objective: weight shape " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                          " inconsistent with terms");
}

RowMatrix term_probabilities(const Objective& obj, const Matrix& w) {
  const RowMatrix logits = obj.terms.features * w;
  return softmax_rows(logits);
}

}  // namespace

double objective_value(const Objective& obj, const Matrix& w) {
  check_shapes(obj, w);
  double loss = obj.ridge * w.squaredNorm();
  if (obj.terms.size() == 0) return loss;
  const RowMatrix P = term_probabilities(obj, w);
  const RowMatrix logp = P.array().max(kProbabilityFloor).log();
  for (Eigen::Index i = 0; i < P.rows(); ++i)
    loss -= obj.terms.weights[i] * obj.terms.targets.row(i).dot(logp.row(i));
  return loss;
}

Matrix objective_grad(const Objective& obj, const Matrix& w) {
  check_shapes(obj, w);
  Matrix g = 2.0 * obj.ridge * w;
  if (obj.terms.size() == 0) return g;
  const RowMatrix P = term_probabilities(obj, w);
  const RowMatrix resid = obj.terms.weights.asDiagonal() * (P - obj.terms.targets);
  g.noalias() += obj.terms.features.transpose() * resid;
  return g;
}

Matrix hvp(const Objective& obj, const Matrix& w, const Matrix& v) {
  check_shapes(obj, w);
  if (v.rows() != w.rows() || v.cols() != w.cols()) throw InvalidArgument("hvp: direction shape differs from w");
  Matrix out = 2.0 * obj.ridge * v;
  if (obj.terms.size() == 0) return out;
  const RowMatrix P = term_probabilities(obj, w);
  const RowMatrix U = obj.terms.features * v;
  RowMatrix R(P.rows(), P.cols());
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    const double pu = P.row(i).dot(U.row(i));
    R.row(i) = obj.terms.weights[i] * (P.row(i).array() * U.row(i).array() - P.row(i).array() * pu);
  }
  out.noalias() += obj.terms.features.transpose() * R;
  return out;
}

CgResult cg_solve(const LinearOperator& apply_h, const Matrix& g, int steps, double tolerance,
                  const std::function<void(int, const Matrix&)>& on_iterate) {
  CgResult res;
  res.solution = Matrix::Zero(g.rows(), g.cols());
  const double g_norm = g.norm();
  if (!std::isfinite(g_norm)) throw NumericalError("cg_solve: non-finite right-hand side at iteration 0");
  if (g_norm == 0.0) return res;
  Matrix r = g;
  Matrix p = r;
  double rs = r.squaredNorm();
  for (int k = 1; k <= steps; ++k) {
    const Matrix hp = apply_h(p);
    const double php = (p.array() * hp.array()).sum();
    if (!std::isfinite(php)) throw NumericalError("cg_solve: non-finite curvature at iteration " + std::to_string(k));
    if (php <= 0.0) throw NumericalError("cg_solve: operator not positive definite at iteration " + std::to_string(k));
    const double alpha = rs / php;
    res.solution += alpha * p;
    r -= alpha * hp;
    const double rs_next = r.squaredNorm();
    if (!std::isfinite(rs_next) || !res.solution.allFinite())
      throw NumericalError("cg_solve: non-finite iterate at iteration " + std::to_string(k));
    res.iterations = k;
    res.relative_residual = std::sqrt(rs_next) / g_norm;
    if (on_iterate) on_iterate(k, res.solution);
    if (res.relative_residual <= tolerance) break;
    p = r + (rs_next / rs) * p;
    rs = rs_next;
  }
  if (res.iterations == 0) res.relative_residual = 1.0;
  return res;
}

// ---------------------------------------------------------------- sources

void FixedTermSource::draw(std::size_t i, Rng&, Eigen::Ref<Vector> z, Eigen::Ref<Vector> target) const {
  z = terms_.features.row(static_cast<Eigen::Index>(i)).transpose();
  target = terms_.targets.row(static_cast<Eigen::Index>(i)).transpose();
}

AugmentedTermSource::AugmentedTermSource(TermSet clean, std::vector<SampleIndex> samples,
                                         const FeatureAugmenter& augmenter, const NystromMap& nm)
    : clean_(std::move(clean)), samples_(std::move(samples)), augmenter_(&augmenter), nm_(&nm) {
  if (static_cast<Eigen::Index>(samples_.size()) != clean_.size())
    throw InvalidArgument("AugmentedTermSource: sample list and terms differ in length");
}

void AugmentedTermSource::draw(std::size_t i, Rng& rng, Eigen::Ref<Vector> z, Eigen::Ref<Vector> target) const {
  const std::uint64_t seed = rng();
  if (augmenter_->enabled())
    z = map_features(*nm_, augmenter_->augmented(samples_[i], seed));
  else
    z = clean_.features.row(static_cast<Eigen::Index>(i)).transpose();
  target = clean_.targets.row(static_cast<Eigen::Index>(i)).transpose();
}

CachedVariantSource::CachedVariantSource(TermSet clean, std::vector<RowMatrix> variants)
    : clean_(std::move(clean)), variants_(std::move(variants)) {
  if (static_cast<Eigen::Index>(variants_.size()) != clean_.size())
    throw InvalidArgument("CachedVariantSource: one variant block per term required");
  for (const auto& v : variants_)
    if (v.rows() == 0 || v.cols() != clean_.features.cols())
      throw InvalidArgument("CachedVariantSource: variant block has wrong shape");
}

CachedVariantSource CachedVariantSource::build(TermSet clean, const std::vector<SampleIndex>& samples,
                                               const FeatureAugmenter& augmenter, const NystromMap& nm,
                                               std::size_t variants_per_sample, std::uint64_t seed) {
  if (variants_per_sample == 0) throw InvalidArgument("CachedVariantSource: need at least one variant per sample");
  std::vector<RowMatrix> variants;
  variants.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!augmenter.enabled()) {
      variants.emplace_back(clean.features.row(static_cast<Eigen::Index>(i)));
      continue;
    }
    RowMatrix raw(static_cast<Eigen::Index>(variants_per_sample), nm.input_dim());
    for (std::size_t k = 0; k < variants_per_sample; ++k)
      raw.row(static_cast<Eigen::Index>(k)) = augmenter.augmented(samples[i], derive_seed(seed, {samples[i], k})).transpose();
    variants.push_back(map_features_rows(nm, raw));
  }
  return CachedVariantSource(std::move(clean), std::move(variants));
}

void CachedVariantSource::draw(std::size_t i, Rng& rng, Eigen::Ref<Vector> z, Eigen::Ref<Vector> target) const {
  const RowMatrix& block = variants_[i];
  std::uniform_int_distribution<Eigen::Index> pick(0, block.rows() - 1);
  z = block.row(pick(rng)).transpose();
  target = clean_.targets.row(static_cast<Eigen::Index>(i)).transpose();
}

// ---------------------------------------------------------------- trainer

Matrix random_init_weights(Eigen::Index m, Eigen::Index c, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 0.01);
  Matrix w(m, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < m; ++i) w(i, j) = normal(rng);
  return w;
}

ProxyModel train_proxy(const TrainingSource& source, const Matrix& init_w, const ProxyTrainConfig& cfg) {
  if (!(cfg.lambda > 0.0)) throw InvalidArgument("train_proxy: lambda must be positive");
  const std::size_t n = source.size();
  if (n == 0) throw InvalidArgument("train_proxy: no training terms (D_train and B are both empty)");
  if (cfg.batch_size == 0) throw InvalidArgument("train_proxy: batch size must be positive");
  const TermSet& clean = source.clean_terms();
  if (clean.features.cols() != init_w.rows() || clean.targets.cols() != init_w.cols())
    throw InvalidArgument("train_proxy: init_w shape inconsistent with terms");

  ProxyModel model;
  model.w = init_w;
  model.lambda = cfg.lambda;
  model.seed = cfg.seed;
  if (cfg.iterations <= 0) return model;

  const Eigen::Index m = init_w.rows(), c = init_w.cols();
  const std::size_t bs = std::min(cfg.batch_size, n);
  const double scale = static_cast<double>(n) / static_cast<double>(bs);
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  Matrix m1 = Matrix::Zero(m, c), m2 = Matrix::Zero(m, c);
  RowMatrix Zb(static_cast<Eigen::Index>(bs), m), Tb(static_cast<Eigen::Index>(bs), c);
  Vector ab(static_cast<Eigen::Index>(bs));
  Vector z(m), t(c);
  double b1t = 1.0, b2t = 1.0;
  for (int it = 1; it <= cfg.iterations; ++it) {
    if (bs < n) {
      for (std::size_t k = 0; k < bs; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, n - 1);
        std::swap(order[k], order[pick(rng)]);
      }
    }
    for (std::size_t k = 0; k < bs; ++k) {
      const std::size_t term = order[k];
      source.draw(term, rng, z, t);
      Zb.row(static_cast<Eigen::Index>(k)) = z.transpose();
      Tb.row(static_cast<Eigen::Index>(k)) = t.transpose();
      ab[static_cast<Eigen::Index>(k)] = source.weight(term);
    }
    const RowMatrix P = softmax_rows(Zb * model.w);
    const RowMatrix resid = (scale * ab).asDiagonal() * (P - Tb);
    Matrix grad = 2.0 * cfg.lambda * model.w;
    grad.noalias() += Zb.transpose() * resid;

    b1t *= cfg.adam.beta1;
    b2t *= cfg.adam.beta2;
    m1 = cfg.adam.beta1 * m1 + (1.0 - cfg.adam.beta1) * grad;
    m2 = cfg.adam.beta2 * m2 + (1.0 - cfg.adam.beta2) * grad.cwiseAbs2();
    const double step = cfg.adam.learning_rate * std::sqrt(1.0 - b2t) / (1.0 - b1t);
    model.w.array() -= step * m1.array() / (m2.array().sqrt() + cfg.adam.epsilon * std::sqrt(1.0 - b2t));
    if (!model.w.allFinite()) throw NumericalError("train_proxy: non-finite weights at iteration " + std::to_string(it));
    if (cfg.on_step) cfg.on_step(it, model.w);
  }
  return model;
}

void save_proxy(const std::filesystem::path& path, const ProxyModel& model) {
  write_matrix_file(path, MatrixFile::from_matrix(model.w));
  nlohmann::json meta{{"lambda", model.lambda}, {"m", model.features()}, {"c", model.classes()}, {"seed", model.seed}};
  std::ofstream os(path.string() + ".json");
  if (!os) throw IngestError("cannot write " + path.string() + ".json");
  os << meta.dump(2) << '\n';
}

ProxyModel load_proxy(const std::filesystem::path& path) {
  std::ifstream is(path.string() + ".json");
  if (!is) throw IngestError("cannot open " + path.string() + ".json");
  nlohmann::json meta;
  try {
    is >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(path.string() + ".json: " + e.what());
  }
  ProxyModel model;
  model.w = read_matrix_file(path).single_matrix();
  model.lambda = meta.at("lambda").get<double>();
  model.seed = meta.at("seed").get<std::uint64_t>();
  if (meta.at("m").get<Eigen::Index>() != model.w.rows() || meta.at("c").get<Eigen::Index>() != model.w.cols())
    throw IngestError(path.string() + ": metadata shape does not match stored weights");
  return model;
}

}  // namespace bal
