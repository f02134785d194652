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

#include <doctest.h>

#include <random>

#include "bal/parallel_kernels.hpp"
#include "bal/softmax.hpp"
#include "oracles.hpp"

using namespace bal;

TEST_CASE("parallel kernel matrix equals the serial reference bit for bit") {
  std::mt19937_64 rng(1);
  const RowMatrix X = oracle::random_rows(257, 6, rng), Y = oracle::random_rows(131, 6, rng);
  for (const auto& spec : {KernelSpec::rbf(0.4), KernelSpec::relu_ntk(3)})
    CHECK(kernels::kernel_matrix(spec, X, Y) == kernels::serial::kernel_matrix(spec, X, Y));
}

TEST_CASE("parallel affinity equals the serial reference and has a zero diagonal") {
  std::mt19937_64 rng(2);
  const RowMatrix X = oracle::random_rows(300, 4, rng);
  const Matrix S = kernels::rbf_affinity(X, 0.8);
  CHECK(S == kernels::serial::rbf_affinity(X, 0.8));
  CHECK(S.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK(S == S.transpose());
}

TEST_CASE("parallel Nyström mapping equals the serial reference") {
  std::mt19937_64 rng(3);
  const RowMatrix X = oracle::random_rows(400, 5, rng), U = oracle::random_rows(40, 5, rng);
  const Matrix F = oracle::random_matrix(40, 40, rng);
  for (const auto& spec : {KernelSpec::rbf(0.4), KernelSpec::relu_ntk(2)})
    CHECK(kernels::map_rows(spec, X, U, F) == kernels::serial::map_rows(spec, X, U, F));
}

TEST_CASE("parallel bilevel scores equal the serial reference and the formula") {
  std::mt19937_64 rng(4);
  const RowMatrix Z = oracle::random_rows(500, 12, rng);
  const Matrix w = oracle::random_matrix(12, 4, rng), v = oracle::random_matrix(12, 4, rng);
  const RowMatrix T = oracle::random_simplex_rows(500, 4, rng);
  for (double sign : {1.0, -1.0}) {
    const Vector s = kernels::bilevel_scores(Z, w, T, v, sign);
    CHECK(s == kernels::serial::bilevel_scores(Z, w, T, v, sign));
    for (Eigen::Index i = 0; i < 5; ++i) {
      const Vector z = Z.row(i).transpose();
      const Matrix g = z * (softmax(w.transpose() * z) - T.row(i).transpose()).transpose();
      CHECK(s[i] == doctest::Approx(sign * (g.array() * v.array()).sum()).epsilon(1e-12));
    }
  }
}

TEST_CASE("parallel min-distance relaxation equals the serial reference") {
  std::mt19937_64 rng(5);
  const RowMatrix E = oracle::random_rows(1000, 8, rng);
  Vector a = Vector::Constant(1000, 1e300), b = a;
  for (int k = 0; k < 5; ++k) {
    const Vector center = E.row(k * 7).transpose();
    kernels::relax_min_distance(E, center, a);
    kernels::serial::relax_min_distance(E, center, b);
  }
  CHECK(a == b);
  CHECK(a[0] == 0.0);
}
