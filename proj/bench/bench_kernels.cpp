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

// Serial reference vs OpenMP kernels. Run with OMP_NUM_THREADS=<n>.

#include <benchmark/benchmark.h>

#include <random>

#include "bal/parallel_kernels.hpp"

using namespace bal;

namespace {

RowMatrix random_rows(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  RowMatrix X(n, d);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = g(rng);
  return X;
}

template <bool Parallel>
void BM_KernelMatrix(benchmark::State& st) {
  const RowMatrix X = random_rows(st.range(0), 64, 1);
  const KernelSpec spec = KernelSpec::relu_ntk(3);
  for (auto _ : st) benchmark::DoNotOptimize(Parallel ? kernels::kernel_matrix(spec, X, X) : kernels::serial::kernel_matrix(spec, X, X));
  st.SetItemsProcessed(st.iterations() * st.range(0) * st.range(0));
}

template <bool Parallel>
void BM_RbfAffinity(benchmark::State& st) {
  const RowMatrix X = random_rows(st.range(0), 1024, 2);
  for (auto _ : st) benchmark::DoNotOptimize(Parallel ? kernels::rbf_affinity(X, 1e-3) : kernels::serial::rbf_affinity(X, 1e-3));
}

template <bool Parallel>
void BM_MapRows(benchmark::State& st) {
  const RowMatrix X = random_rows(st.range(0), 1024, 3), U = random_rows(200, 1024, 4);
  const Matrix F = Matrix::Identity(200, 200);
  const KernelSpec spec = KernelSpec::rbf(1e-3);
  for (auto _ : st)
    benchmark::DoNotOptimize(Parallel ? kernels::map_rows(spec, X, U, F) : kernels::serial::map_rows(spec, X, U, F));
}

template <bool Parallel>
void BM_BilevelScores(benchmark::State& st) {
  const Eigen::Index n = st.range(0), m = 200, c = 10;
  const RowMatrix Z = random_rows(n, m, 5), T = random_rows(n, c, 6).cwiseAbs();
  const Matrix w = random_rows(m, c, 7), v = random_rows(m, c, 8);
  for (auto _ : st)
    benchmark::DoNotOptimize(Parallel ? kernels::bilevel_scores(Z, w, T, v, 1.0) : kernels::serial::bilevel_scores(Z, w, T, v, 1.0));
}

}  // namespace

BENCHMARK(BM_KernelMatrix<false>)->Name("kernel_matrix/serial")->Arg(256)->Arg(1024);
BENCHMARK(BM_KernelMatrix<true>)->Name("kernel_matrix/openmp")->Arg(256)->Arg(1024)->UseRealTime();
BENCHMARK(BM_RbfAffinity<false>)->Name("rbf_affinity/serial")->Arg(500);
BENCHMARK(BM_RbfAffinity<true>)->Name("rbf_affinity/openmp")->Arg(500)->UseRealTime();
BENCHMARK(BM_MapRows<false>)->Name("map_rows/serial")->Arg(1000);
BENCHMARK(BM_MapRows<true>)->Name("map_rows/openmp")->Arg(1000)->UseRealTime();
BENCHMARK(BM_BilevelScores<false>)->Name("bilevel_scores/serial")->Arg(5000);
BENCHMARK(BM_BilevelScores<true>)->Name("bilevel_scores/openmp")->Arg(5000)->UseRealTime();

BENCHMARK_MAIN();
