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

#include "bal/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "bal/parallel_kernels.hpp"

namespace bal {

std::string to_string(KernelKind kind) { return kind == KernelKind::rbf ? "rbf" : "relu_ntk"; }

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "rbf") return KernelKind::rbf;
  if (name == "relu_ntk") return KernelKind::relu_ntk;
  throw InvalidArgument("unknown kernel kind '" + name + "' (expected rbf or relu_ntk)");
}

void KernelSpec::validate() const {
  if (kind == KernelKind::rbf && !(rbf_gamma > 0.0)) throw InvalidArgument("rbf_gamma must be positive");
  if (kind == KernelKind::relu_ntk && ntk_depth < 1) throw InvalidArgument("ntk_depth must be at least 1");
}

double arccos_kappa0(double t) {
  t = std::clamp(t, -1.0, 1.0);
  return (std::numbers::pi - std::acos(t)) / std::numbers::pi;
}

double arccos_kappa1(double t) {
  t = std::clamp(t, -1.0, 1.0);
  return (std::sqrt(std::max(0.0, 1.0 - t * t)) + (std::numbers::pi - std::acos(t)) * t) / std::numbers::pi;
}

double relu_ntk(double xx, double yy, double xy, int depth) {
  const double norm = std::sqrt(std::max(0.0, xx) * std::max(0.0, yy));
  double sigma = xy;
  double theta = xy;
  for (int l = 0; l < depth; ++l) {
    const double t = norm > 0.0 ? sigma / norm : 0.0;
    sigma = norm * arccos_kappa1(t);
    theta = theta * arccos_kappa0(t) + sigma;
  }
  return theta;
}

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  if (x.size() != y.size())
    throw InvalidArgument("kernel_eval: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()) + ")");
  if (spec.kind == KernelKind::rbf) return std::exp(-spec.rbf_gamma * (x - y).squaredNorm());
  return relu_ntk(x.squaredNorm(), y.squaredNorm(), x.dot(y), spec.ntk_depth);
}

Matrix kernel_matrix(const KernelSpec& spec, const RowMatrix& X, const RowMatrix& Y) {
  return kernels::kernel_matrix(spec, X, Y);
}

double median_heuristic_gamma(const RowMatrix& X, std::size_t max_points) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (n < 2) return 1.0;
  const std::size_t stride = std::max<std::size_t>(1, n / std::max<std::size_t>(2, max_points));
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < n; i += stride) rows.push_back(static_cast<Eigen::Index>(i));
  std::vector<double> d2;
  d2.reserve(rows.size() * (rows.size() - 1) / 2);
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = a + 1; b < rows.size(); ++b) d2.push_back((X.row(rows[a]) - X.row(rows[b])).squaredNorm());
  if (d2.empty()) return 1.0;
  auto mid = d2.begin() + static_cast<std::ptrdiff_t>(d2.size() / 2);
  std::nth_element(d2.begin(), mid, d2.end());
  const double med = *mid;
  return med > 0.0 ? 1.0 / (2.0 * med) : 1.0;
}

double nn_median_gamma(const RowMatrix& X, std::size_t max_points) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (n < 2) return 1.0;
  const std::size_t stride = std::max<std::size_t>(1, n / std::max<std::size_t>(1, max_points));
  std::vector<double> nn;
  for (std::size_t i = 0; i < n; i += stride) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = (X.row(static_cast<Eigen::Index>(i)) - X.row(static_cast<Eigen::Index>(j))).squaredNorm();
      if (d > 0.0) best = std::min(best, d);
    }
    if (std::isfinite(best)) nn.push_back(best);
  }
  if (nn.empty()) return 1.0;
  auto mid = nn.begin() + static_cast<std::ptrdiff_t>(nn.size() / 2);
  std::nth_element(nn.begin(), mid, nn.end());
  return 1.0 / (2.0 * *mid);
}

}  // namespace bal
