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

#include <string>

#include "bal/common.hpp"

namespace bal {

enum class KernelKind { rbf, relu_ntk };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

struct KernelSpec {
  KernelKind kind = KernelKind::relu_ntk;
  double rbf_gamma = 1.0;  // rbf: exp(-gamma * |x - y|^2)
  int ntk_depth = 3;       // relu_ntk: number of hidden ReLU layers

  void validate() const;

  static KernelSpec rbf(double gamma) { return {KernelKind::rbf, gamma, 3}; }
  static KernelSpec relu_ntk(int depth) { return {KernelKind::relu_ntk, 1.0, depth}; }
};

// Infinite-width NTK of a bias-free fully connected ReLU network with `depth`
// hidden layers (NTK parameterization, c_sigma = 2), from the input Gram entries.
//
//   Sigma^0 = <x, y>,  Theta^0 = Sigma^0
//   t       = Sigma^{l-1}(x,y) / sqrt(Sigma(x,x) Sigma(y,y))   (clamped to [-1, 1])
//   Sigma^l = sqrt(Sigma(x,x) Sigma(y,y)) * kappa1(t)
//   Theta^l = Theta^{l-1} * kappa0(t) + Sigma^l
//
// with kappa0(t) = (pi - acos t) / pi and kappa1(t) = (sqrt(1 - t^2) + (pi - acos t) t) / pi.
// The diagonal Sigma(x,x) = |x|^2 is preserved across layers.
double relu_ntk(double xx, double yy, double xy, int depth);

// Arc-cosine functions of order 0 and 1 (normalized so kappa(1) = 1).
double arccos_kappa0(double t);
double arccos_kappa1(double t);

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y);

// Entry (i, j) = kernel_eval(spec, X.row(i), Y.row(j)). OpenMP-parallel over rows of X.
Matrix kernel_matrix(const KernelSpec& spec, const RowMatrix& X, const RowMatrix& Y);

// Median heuristic: gamma = 1 / (2 * median_{i<j} |x_i - x_j|^2), over at most
// `max_points` rows taken with a fixed stride.
double median_heuristic_gamma(const RowMatrix& X, std::size_t max_points = 1000);

// Local-scale median heuristic: gamma = 1 / (2 * median_i d_i^2) with d_i the
// distance from x_i to its nearest distinct neighbour, over at most `max_points`
// query rows taken with a fixed stride.
double nn_median_gamma(const RowMatrix& X, std::size_t max_points = 1000);

}  // namespace bal
