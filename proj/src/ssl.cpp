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

#include "bal/ssl.hpp"

#include <cmath>
#include <limits>

#include "bal/parallel_kernels.hpp"
#include "bal/random.hpp"
#include "bal/softmax.hpp"

namespace bal {

std::string to_string(SslKind kind) {
  return kind == SslKind::label_propagation ? "label_propagation" : "kernel_logistic";
}

SslKind ssl_kind_from_string(const std::string& name) {
  if (name == "label_propagation") return SslKind::label_propagation;
  if (name == "kernel_logistic") return SslKind::kernel_logistic;
  throw InvalidArgument("unknown ssl kind '" + name + "' (expected label_propagation or kernel_logistic)");
}

int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  int best = 0;
  for (Eigen::Index k = 1; k < row.size(); ++k)
    if (row[k] > row[best]) best = static_cast<int>(k);
  return best;
}

double accuracy(const RowMatrix& distributions, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(distributions.rows()) != labels.size())
    throw InvalidArgument("accuracy: prediction and label counts differ");
  std::size_t seen = 0, correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    ++seen;
    if (argmax_lowest(distributions.row(static_cast<Eigen::Index>(i))) == labels[i]) ++correct;
  }
  if (seen == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(correct) / static_cast<double>(seen);
}

namespace {

void validate_labels(const std::vector<int>& labels, int classes) {
  if (labels.empty()) throw InvalidArgument("ssl_train: labeled set is empty");
  std::vector<int> counts(static_cast<std::size_t>(classes), 0);
  for (int y : labels) {
    if (y < 0 || y >= classes) throw InvalidArgument("ssl_train: label " + std::to_string(y) + " out of range");
    ++counts[static_cast<std::size_t>(y)];
  }
  for (int k = 0; k < classes; ++k)
    if (counts[static_cast<std::size_t>(k)] == 0)
      throw InvalidArgument("ssl_train: class " + std::to_string(k) + " has no labeled sample");
}

RowMatrix stack(const RowMatrix& a, const RowMatrix& b) {
  if (b.rows() == 0) return a;
  if (a.cols() != b.cols()) throw InvalidArgument("ssl_train: labeled and unlabeled feature widths differ");
  RowMatrix out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

// Row distributions: normalized mass, falling back to one smoothing step for
// rows that carry none, then to uniform.
RowMatrix normalize_rows(const RowMatrix& P, const Matrix& S) {
  const Eigen::Index n = P.rows(), c = P.cols();
  RowMatrix out(n, c);
  RowMatrix smoothed;
  for (Eigen::Index i = 0; i < n; ++i) {
    double mass = P.row(i).sum();
    if (mass > 0.0) {
      out.row(i) = P.row(i) / mass;
      continue;
    }
    if (smoothed.size() == 0) smoothed = S * P;
    mass = smoothed.row(i).sum();
    out.row(i) = mass > 0.0 ? RowMatrix(smoothed.row(i) / mass) : RowMatrix::Constant(1, c, 1.0 / c);
  }
  return out;
}

}  // namespace

SslModel ssl_train(const RowMatrix& labeled, const std::vector<int>& labels, const RowMatrix& unlabeled,
                   const SslConfig& cfg) {
  if (cfg.classes < 1) throw InvalidArgument("ssl_train: class count must be positive");
  if (static_cast<std::size_t>(labeled.rows()) != labels.size())
    throw InvalidArgument("ssl_train: labeled rows and labels differ in count");
  validate_labels(labels, cfg.classes);

  SslModel model;
  model.kind_ = cfg.kind;
  model.classes_ = cfg.classes;
  const RowMatrix Y_l = TermSet::one_hot(labels, cfg.classes);

  if (cfg.kind == SslKind::kernel_logistic) {
    const RowMatrix all = stack(labeled, unlabeled);
    const auto m = std::min<std::size_t>(cfg.nystrom_m, static_cast<std::size_t>(all.rows()));
    model.nm_ = std::make_shared<NystromMap>(build_nystrom(cfg.kernel, all, m, derive_seed(cfg.seed, {1})));
    FixedTermSource source(TermSet(map_features_rows(*model.nm_, labeled), Y_l));
    ProxyTrainConfig train = cfg.train;
    train.seed = derive_seed(cfg.seed, {2});
    model.proxy_ = train_proxy(source, random_init_weights(model.nm_->m(), cfg.classes, derive_seed(cfg.seed, {3})), train);
    return model;
  }

  if (!(cfg.alpha >= 0.0 && cfg.alpha < 1.0)) throw InvalidArgument("ssl_train: alpha must lie in [0, 1)");
  model.nodes_ = stack(labeled, unlabeled);
  model.gamma_ = cfg.affinity_gamma > 0.0 ? cfg.affinity_gamma : nn_median_gamma(model.nodes_);

  const Eigen::Index n = model.nodes_.rows(), n_l = labeled.rows(), c = cfg.classes;
  Matrix S = kernels::rbf_affinity(model.nodes_, model.gamma_);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = S.row(i).sum();
    if (d > 0.0) S.row(i) /= d;
  }
  RowMatrix Y = RowMatrix::Zero(n, c);
  Y.topRows(n_l) = Y_l;
  RowMatrix P = Y;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    RowMatrix next = cfg.alpha * (S * P) + (1.0 - cfg.alpha) * Y;
    next.topRows(n_l) = Y_l;
    const double change = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    model.trace_.max_change.push_back(change);
    model.trace_.iterations = it;
    if (change <= cfg.tolerance) {
      model.trace_.converged = true;
      break;
    }
  }
  model.node_dist_ = normalize_rows(P, S);
  return model;
}

RowMatrix SslModel::predict(const RowMatrix& X) const {
  if (kind_ == SslKind::kernel_logistic) {
    const RowMatrix Z = map_features_rows(*nm_, X);
    return softmax_rows(Z * proxy_.w);
  }
  if (X.cols() != nodes_.cols())
    throw InvalidArgument("SslModel::predict: feature width " + std::to_string(X.cols()) + ", model expects " +
                          std::to_string(nodes_.cols()));
  const Matrix K = kernels::kernel_matrix(KernelSpec::rbf(gamma_), X, nodes_);
  RowMatrix out(X.rows(), classes_);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    Eigen::Index exact = -1;
    for (Eigen::Index j = 0; j < nodes_.rows() && exact < 0; ++j)
      if (K(i, j) == 1.0 && (X.row(i) - nodes_.row(j)).squaredNorm() == 0.0) exact = j;
    if (exact >= 0) {
      out.row(i) = node_dist_.row(exact);
      continue;
    }
    const double mass = K.row(i).sum();
    if (mass > 0.0) {
      out.row(i) = (K.row(i) * node_dist_) / mass;
    } else {
      Eigen::Index nearest = 0;
      (nodes_.rowwise() - X.row(i)).rowwise().squaredNorm().minCoeff(&nearest);
      out.row(i) = node_dist_.row(nearest);
    }
  }
  return out;
}

RowMatrix pseudo_label(const SslModel& model, const RowMatrix& pool) { return model.predict(pool); }

double evaluate(const SslModel& model, const RowMatrix& test, const std::vector<int>& labels) {
  if (test.rows() == 0) throw InvalidArgument("evaluate: test set is empty");
  return accuracy(model.predict(test), labels);
}

}  // namespace bal
