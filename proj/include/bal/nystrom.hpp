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
#include <filesystem>
#include <vector>

#include "bal/common.hpp"
#include "bal/kernel.hpp"

namespace bal {

// Eigenvalues at or below this fraction of the largest are treated as zero.
inline constexpr double kPinvRelativeTolerance = 1e-10;

// Landmark-based feature map z_x = (K^U)^{+1/2} [k(x, u_1), ..., k(x, u_m)]^T.
// Immutable once built; safe to share across threads.
struct NystromMap {
  KernelSpec kernel;
  RowMatrix landmarks;                        // m x d
  std::vector<SampleIndex> landmark_indices;  // positions in the candidate set it was built from
  Matrix factor;                              // m x m, symmetric
  Eigen::Index rank = 0;                      // eigenpairs retained

  Eigen::Index m() const { return landmarks.rows(); }
  Eigen::Index input_dim() const { return landmarks.cols(); }
};

// V diag(s^{-1/2}) V^T over eigenpairs with s > tol * s_max.
Matrix pinv_sqrt(const Matrix& K, double relative_tolerance, Eigen::Index* rank = nullptr);

NystromMap nystrom_from_landmarks(const KernelSpec& spec, RowMatrix landmarks, std::vector<SampleIndex> indices);

// Uniform landmark subset of size m (without replacement, seeded).
NystromMap build_nystrom(const KernelSpec& spec, const RowMatrix& candidates, std::size_t m, std::uint64_t seed);

Vector map_features(const NystromMap& nm, const Eigen::Ref<const Vector>& x);
RowMatrix map_features_rows(const NystromMap& nm, const RowMatrix& X);

// Factor goes to `path` (matrix file), kernel spec and landmark indices to
// `path` + ".json". Loading rebuilds landmark rows from `candidates`.
void save_nystrom(const std::filesystem::path& path, const NystromMap& nm);
NystromMap load_nystrom(const std::filesystem::path& path, const RowMatrix& candidates);

}  // namespace bal
