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

#include "bal/nystrom.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "bal/matrix_io.hpp"
#include "bal/parallel_kernels.hpp"
#include "bal/random.hpp"

namespace bal {

Matrix pinv_sqrt(const Matrix& K, double relative_tolerance, Eigen::Index* rank) {
  if (K.rows() != K.cols()) throw InvalidArgument("pinv_sqrt: matrix must be square");
  const Eigen::Index m = K.rows();
  if (m == 0) {
    if (rank) *rank = 0;
    return Matrix(0, 0);
  }
  const Matrix sym = 0.5 * (K + K.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericalError("pinv_sqrt: eigendecomposition failed");
  const Vector& s = eig.eigenvalues();
  const double tau = relative_tolerance * s.maxCoeff();
  Vector inv_root = Vector::Zero(m);
  Eigen::Index kept = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (s[i] > tau && s[i] > 0.0) {
      inv_root[i] = 1.0 / std::sqrt(s[i]);
      ++kept;
    }
  }
  if (rank) *rank = kept;
  const Matrix& V = eig.eigenvectors();
  Matrix F = V * inv_root.asDiagonal() * V.transpose();
  return 0.5 * (F + F.transpose());
}

NystromMap nystrom_from_landmarks(const KernelSpec& spec, RowMatrix landmarks, std::vector<SampleIndex> indices) {
  spec.validate();
  NystromMap nm;
  nm.kernel = spec;
  nm.landmarks = std::move(landmarks);
  nm.landmark_indices = std::move(indices);
  const Matrix KU = kernels::kernel_matrix(spec, nm.landmarks, nm.landmarks);
  nm.factor = pinv_sqrt(KU, kPinvRelativeTolerance, &nm.rank);
  return nm;
}

NystromMap build_nystrom(const KernelSpec& spec, const RowMatrix& candidates, std::size_t m, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(candidates.rows());
  if (m > n)
    throw InvalidArgument("build_nystrom: m = " + std::to_string(m) + " exceeds " + std::to_string(n) + " candidates");
  if (m == 0) throw InvalidArgument("build_nystrom: m must be positive");
  std::vector<SampleIndex> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  Rng rng(seed);
  auto chosen = sample_without_replacement(all, m, rng);
  RowMatrix U(static_cast<Eigen::Index>(m), candidates.cols());
  for (std::size_t i = 0; i < m; ++i) U.row(static_cast<Eigen::Index>(i)) = candidates.row(static_cast<Eigen::Index>(chosen[i]));
  return nystrom_from_landmarks(spec, std::move(U), std::move(chosen));
}

Vector map_features(const NystromMap& nm, const Eigen::Ref<const Vector>& x) {
  if (x.size() != nm.input_dim())
    throw InvalidArgument("map_features: input dimension " + std::to_string(x.size()) +
                          " does not match landmark dimension " + std::to_string(nm.input_dim()));
  RowMatrix row = x.transpose();
  return kernels::serial::map_rows(nm.kernel, row, nm.landmarks, nm.factor).row(0).transpose();
}

RowMatrix map_features_rows(const NystromMap& nm, const RowMatrix& X) {
  return kernels::map_rows(nm.kernel, X, nm.landmarks, nm.factor);
}

void save_nystrom(const std::filesystem::path& path, const NystromMap& nm) {
  write_matrix_file(path, MatrixFile::from_matrix(nm.factor));
  nlohmann::json meta;
  meta["kernel"] = to_string(nm.kernel.kind);
  meta["rbf_gamma"] = nm.kernel.rbf_gamma;
  meta["ntk_depth"] = nm.kernel.ntk_depth;
  meta["rank"] = nm.rank;
  meta["landmark_indices"] = nm.landmark_indices;
  std::ofstream os(path.string() + ".json");
  if (!os) throw IngestError("cannot write " + path.string() + ".json");
  os << meta.dump(2) << '\n';
}

NystromMap load_nystrom(const std::filesystem::path& path, const RowMatrix& candidates) {
  std::ifstream is(path.string() + ".json");
  if (!is) throw IngestError("cannot open " + path.string() + ".json");
  nlohmann::json meta;
  try {
    is >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(path.string() + ".json: " + e.what());
  }
  NystromMap nm;
  nm.kernel.kind = kernel_kind_from_string(meta.at("kernel").get<std::string>());
  nm.kernel.rbf_gamma = meta.at("rbf_gamma").get<double>();
  nm.kernel.ntk_depth = meta.at("ntk_depth").get<int>();
  nm.rank = meta.value("rank", Eigen::Index{0});
  nm.landmark_indices = meta.at("landmark_indices").get<std::vector<SampleIndex>>();
  nm.factor = read_matrix_file(path).single_matrix();
  const auto m = static_cast<Eigen::Index>(nm.landmark_indices.size());
  if (nm.factor.rows() != m || nm.factor.cols() != m)
    throw IngestError(path.string() + ": factor shape does not match landmark count");
  nm.landmarks.resize(m, candidates.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto idx = nm.landmark_indices[static_cast<std::size_t>(i)];
    if (idx >= static_cast<SampleIndex>(candidates.rows())) throw IngestError(path.string() + ": landmark index out of range");
    nm.landmarks.row(i) = candidates.row(static_cast<Eigen::Index>(idx));
  }
  return nm;
}

}  // namespace bal
