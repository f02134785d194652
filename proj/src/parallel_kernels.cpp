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

#include "bal/parallel_kernels.hpp"

#include <omp.h>

#include "bal/softmax.hpp"

namespace bal::kernels {
namespace {

// Both variants run the same loop body; `parallel` only toggles the OpenMP team.

Matrix kernel_matrix_impl(const KernelSpec& spec, const RowMatrix& X, const RowMatrix& Y, bool parallel) {
  spec.validate();
  if (X.cols() != Y.cols())
    throw InvalidArgument("kernel_matrix: dimension mismatch (" + std::to_string(X.cols()) + " vs " +
                          std::to_string(Y.cols()) + ")");
  const Eigen::Index n = X.rows(), m = Y.rows();
  Matrix K(n, m);
  const Vector xx = X.rowwise().squaredNorm();
  const Vector yy = Y.rowwise().squaredNorm();
#pragma omp parallel for schedule(static) if (parallel)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (spec.kind == KernelKind::rbf) {
        K(i, j) = std::exp(-spec.rbf_gamma * (X.row(i) - Y.row(j)).squaredNorm());
      } else {
        K(i, j) = relu_ntk(xx[i], yy[j], X.row(i).dot(Y.row(j)), spec.ntk_depth);
      }
    }
  }
  return K;
}

Matrix rbf_affinity_impl(const RowMatrix& X, double gamma, bool parallel) {
  const Eigen::Index n = X.rows();
  Matrix W(n, n);
#pragma omp parallel for schedule(static) if (parallel)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j)
      W(i, j) = i == j ? 0.0 : std::exp(-gamma * (X.row(i) - X.row(j)).squaredNorm());
  }
  return W;
}

RowMatrix map_rows_impl(const KernelSpec& spec, const RowMatrix& X, const RowMatrix& U, const Matrix& factor,
                        bool parallel) {
  spec.validate();
  if (X.cols() != U.cols())
    throw InvalidArgument("map_features: input dimension " + std::to_string(X.cols()) +
                          " does not match landmark dimension " + std::to_string(U.cols()));
  const Eigen::Index n = X.rows(), m = U.rows();
  RowMatrix Z(n, m);
  const Vector uu = U.rowwise().squaredNorm();
#pragma omp parallel for schedule(static) if (parallel)
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector k(m);
    const double xx = X.row(i).squaredNorm();
    for (Eigen::Index j = 0; j < m; ++j) {
      k[j] = spec.kind == KernelKind::rbf ? std::exp(-spec.rbf_gamma * (X.row(i) - U.row(j)).squaredNorm())
                                          : relu_ntk(xx, uu[j], X.row(i).dot(U.row(j)), spec.ntk_depth);
    }
    Z.row(i).noalias() = (factor * k).transpose();
  }
  return Z;
}

Vector bilevel_scores_impl(const RowMatrix& Z, const Matrix& w, const RowMatrix& T, const Matrix& v, double sign,
                           bool parallel) {
  if (Z.cols() != w.rows() || w.rows() != v.rows() || w.cols() != v.cols() || T.rows() != Z.rows() ||
      T.cols() != w.cols())
    throw InvalidArgument("bilevel_scores: inconsistent shapes");
  const Eigen::Index n = Z.rows();
  Vector scores(n);
#pragma omp parallel for schedule(static) if (parallel)
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector z = Z.row(i).transpose();
    const Vector p = softmax(w.transpose() * z);
    const Vector u = v.transpose() * z;
    scores[i] = sign * u.dot(p - T.row(i).transpose());
  }
  return scores;
}

void relax_min_distance_impl(const RowMatrix& E, const Eigen::Ref<const Vector>& center, Eigen::Ref<Vector> min_d,
                             bool parallel) {
  if (E.cols() != center.size() || min_d.size() != E.rows())
    throw InvalidArgument("relax_min_distance: inconsistent shapes");
  const Eigen::Index n = E.rows();
#pragma omp parallel for schedule(static) if (parallel)
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = (E.row(i).transpose() - center).squaredNorm();
    if (d < min_d[i]) min_d[i] = d;
  }
}

}  // namespace

Matrix kernel_matrix(const KernelSpec& spec, const RowMatrix& X, const RowMatrix& Y) {
  return kernel_matrix_impl(spec, X, Y, true);
}
Matrix rbf_affinity(const RowMatrix& X, double gamma) { return rbf_affinity_impl(X, gamma, true); }
RowMatrix map_rows(const KernelSpec& spec, const RowMatrix& X, const RowMatrix& landmarks, const Matrix& factor) {
  return map_rows_impl(spec, X, landmarks, factor, true);
}
Vector bilevel_scores(const RowMatrix& Z, const Matrix& w, const RowMatrix& targets, const Matrix& v, double sign) {
  return bilevel_scores_impl(Z, w, targets, v, sign, true);
}
void relax_min_distance(const RowMatrix& E, const Eigen::Ref<const Vector>& center, Eigen::Ref<Vector> min_d) {
  relax_min_distance_impl(E, center, min_d, true);
}

namespace serial {

Matrix kernel_matrix(const KernelSpec& spec, const RowMatrix& X, const RowMatrix& Y) {
  return kernel_matrix_impl(spec, X, Y, false);
}
Matrix rbf_affinity(const RowMatrix& X, double gamma) { return rbf_affinity_impl(X, gamma, false); }
RowMatrix map_rows(const KernelSpec& spec, const RowMatrix& X, const RowMatrix& landmarks, const Matrix& factor) {
  return map_rows_impl(spec, X, landmarks, factor, false);
}
Vector bilevel_scores(const RowMatrix& Z, const Matrix& w, const RowMatrix& targets, const Matrix& v, double sign) {
  return bilevel_scores_impl(Z, w, targets, v, sign, false);
}
void relax_min_distance(const RowMatrix& E, const Eigen::Ref<const Vector>& center, Eigen::Ref<Vector> min_d) {
  relax_min_distance_impl(E, center, min_d, false);
}

}  // namespace serial

int max_threads() { return omp_get_max_threads(); }

}  // namespace bal::kernels
