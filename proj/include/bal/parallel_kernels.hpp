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

// Data-parallel inner loops. Each kernel has an OpenMP implementation in
// bal::kernels and a single-threaded reference in bal::kernels::serial with the
// same per-element arithmetic, so the two agree bit for bit.

#include "bal/common.hpp"
#include "bal/kernel.hpp"

namespace bal::kernels {

Matrix kernel_matrix(const KernelSpec& spec, const RowMatrix& X, const RowMatrix& Y);

// exp(-gamma |x_i - x_j|^2) with a zero diagonal.
Matrix rbf_affinity(const RowMatrix& X, double gamma);

// Nyström features for every row: Z = K(X, U) * factor.
RowMatrix map_rows(const KernelSpec& spec, const RowMatrix& X, const RowMatrix& landmarks, const Matrix& factor);

// Per-candidate selection score sign * <z_i (p_i - t_i)^T, v>_F = sign * (v^T z_i) . (p_i - t_i),
// where p_i = softmax(w^T z_i).
Vector bilevel_scores(const RowMatrix& Z, const Matrix& w, const RowMatrix& targets, const Matrix& v, double sign);

// min_d[i] = min(min_d[i], |E_i - center|^2).
void relax_min_distance(const RowMatrix& E, const Eigen::Ref<const Vector>& center, Eigen::Ref<Vector> min_d);

namespace serial {

Matrix kernel_matrix(const KernelSpec& spec, const RowMatrix& X, const RowMatrix& Y);
Matrix rbf_affinity(const RowMatrix& X, double gamma);
RowMatrix map_rows(const KernelSpec& spec, const RowMatrix& X, const RowMatrix& landmarks, const Matrix& factor);
Vector bilevel_scores(const RowMatrix& Z, const Matrix& w, const RowMatrix& targets, const Matrix& v, double sign);
void relax_min_distance(const RowMatrix& E, const Eigen::Ref<const Vector>& center, Eigen::Ref<Vector> min_d);

}  // namespace serial

// Threads used by the parallel kernels (omp_get_max_threads()).
int max_threads();

}  // namespace bal::kernels
