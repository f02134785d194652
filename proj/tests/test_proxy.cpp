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

#include <cmath>
#include <filesystem>
#include <random>

#include "bal/proxy.hpp"
#include "bal/softmax.hpp"
#include "oracles.hpp"

using namespace bal;

namespace {

Matrix fd_gradient(const Objective& obj, const Matrix& w, double eps) {
  Matrix g(w.rows(), w.cols());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    Matrix a = w, b = w;
    a.data()[i] += eps;
    b.data()[i] -= eps;
    g.data()[i] = (objective_value(obj, a) - objective_value(obj, b)) / (2.0 * eps);
  }
  return g;
}

}  // namespace

TEST_CASE("softmax of zeros is uniform and shift invariant") {
  const Vector p = softmax(Vector::Zero(4));
  for (int k = 0; k < 4; ++k) CHECK(p[k] == doctest::Approx(0.25).epsilon(1e-15));
  Vector l(3);
  l << 0.3, -1.2, 2.0;
  CHECK((softmax(l) - softmax((l.array() + 7.5).matrix())).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((predict(Matrix::Zero(5, 3), Vector::Ones(5)).array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);
}

TEST_CASE("softmax of (log 3, 0) is (0.75, 0.25)") {
  Vector l(2);
  l << std::log(3.0), 0.0;
  const Vector p = softmax(l);
  CHECK(std::abs(p[0] - 0.75) < 1e-12);
  CHECK(std::abs(p[1] - 0.25) < 1e-12);
}

TEST_CASE("loss at w = 0 with one-hot target is log c") {
  for (int c : {2, 3, 10}) {
    const TermSet t(RowMatrix::Ones(1, 4), TermSet::one_hot({1}, c));
    CHECK(objective_value(Objective{t, 0.0}, Matrix::Zero(4, c)) == doctest::Approx(std::log(c)).epsilon(1e-14));
  }
}

TEST_CASE("objective and gradient agree with the reference implementation") {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 10; ++rep) {
    const TermSet t = oracle::random_terms(7, 5, 3, rng);
    const Matrix w = oracle::random_matrix(5, 3, rng, 0.5);
    const Objective obj{t, 0.3};
    CHECK(objective_value(obj, w) == doctest::Approx(oracle::objective(t, 0.3, w)).epsilon(1e-12));
    CHECK(oracle::rel_err(objective_grad(obj, w), oracle::gradient(t, 0.3, w)) < 1e-12);
  }
}

TEST_CASE("gradient matches central finite differences on a 5-term instance") {
  std::mt19937_64 rng(2);
  const TermSet t = oracle::random_terms(5, 4, 3, rng);
  const Matrix w = oracle::random_matrix(4, 3, rng, 0.5);
  const Objective obj{t, 1e-4};
  const double dev = (objective_grad(obj, w) - fd_gradient(obj, w, 1e-5)).cwiseAbs().maxCoeff();
  CHECK(dev <= 1e-6);
}

TEST_CASE("soft target equal to the prediction contributes no gradient") {
  std::mt19937_64 rng(3);
  const Matrix w = oracle::random_matrix(4, 3, rng);
  const RowMatrix z = oracle::random_rows(1, 4, rng);
  const Vector p = predict(w, z.row(0).transpose());
  const TermSet t(z, RowMatrix(p.transpose()));
  CHECK(objective_grad(Objective{t, 0.0}, w).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("hvp of zero is zero and empty terms give pure ridge") {
  std::mt19937_64 rng(4);
  const TermSet t = oracle::random_terms(6, 4, 3, rng);
  const Matrix w = oracle::random_matrix(4, 3, rng);
  CHECK(hvp(Objective{t, 1e-4}, w, Matrix::Zero(4, 3)).cwiseAbs().maxCoeff() == 0.0);
  const Matrix v = oracle::random_matrix(4, 3, rng);
  const Matrix h = hvp(Objective{TermSet(RowMatrix(0, 4), RowMatrix(0, 3)), 0.25}, w, v);
  CHECK((h - 0.5 * v).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hvp matches the dense Hessian and finite differences of the gradient") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Index m = 2 + rep % 6, c = 2 + rep % 4;
    const TermSet t = oracle::random_terms(3 + rep, m, c, rng);
    const Objective obj{t, 1e-4};
    const Matrix w = oracle::random_matrix(m, c, rng, 0.5);
    const Matrix v = oracle::random_matrix(m, c, rng);
    const Matrix h = hvp(obj, w, v);
    const Vector dense = oracle::dense_hessian(t, 1e-4, w) * oracle::flatten(v);
    CHECK(oracle::rel_err(oracle::flatten(h), dense) < 1e-12);
    const double eps = 1e-5;
    const Matrix fd = (objective_grad(obj, w + eps * v) - objective_grad(obj, w - eps * v)) / (2.0 * eps);
    CHECK(oracle::rel_err(h, fd) <= 1e-5);
  }
}

TEST_CASE("curvature is at least 2 lambda |v|^2") {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 200; ++rep) {
    const double lambda = std::pow(10.0, -1.0 - rep % 5);
    const TermSet t = oracle::random_terms(1 + rep % 9, 3, 4, rng);
    const Matrix w = oracle::random_matrix(3, 4, rng, 3.0);
    const Matrix v = oracle::random_matrix(3, 4, rng);
    const double vhv = (v.array() * hvp(Objective{t, lambda}, w, v).array()).sum();
    CHECK(vhv >= 2.0 * lambda * v.squaredNorm() * (1.0 - 1e-12));
  }
}

TEST_CASE("cg_solve on the identity returns g after one iteration") {
  std::mt19937_64 rng(7);
  const Matrix g = oracle::random_matrix(5, 3, rng);
  const CgResult r = cg_solve([](const Matrix& v) { return v; }, g);
  CHECK(r.iterations == 1);
  CHECK((r.solution - g).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("cg_solve of a zero right-hand side is zero") {
  const CgResult r = cg_solve([](const Matrix& v) { return Matrix(2.0 * v); }, Matrix::Zero(4, 2));
  CHECK(r.iterations == 0);
  CHECK(r.solution.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cg_solve matches a dense solve on PD systems up to dimension 60") {
  std::mt19937_64 rng(8);
  for (Eigen::Index dim : {10, 24, 40, 60}) {
    const Matrix A = oracle::random_matrix(dim, dim, rng);
    const Matrix H = A * A.transpose() / double(dim) + 0.1 * Matrix::Identity(dim, dim);
    const Eigen::Index c = dim % 3 == 0 ? 3 : 2, m = dim / c;
    const Matrix g = oracle::random_matrix(m, c, rng);
    auto op = [&](const Matrix& v) { return oracle::unflatten(H * oracle::flatten(v), m, c); };
    const CgResult r = cg_solve(op, g, static_cast<int>(dim));
    const Vector x = H.ldlt().solve(oracle::flatten(g));
    CHECK(oracle::rel_err(oracle::flatten(r.solution), x) <= 1e-6);
  }
}

TEST_CASE("cg error in the energy norm is non-increasing") {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 10; ++rep) {
    const TermSet t = oracle::random_terms(8, 5, 3, rng);
    const Matrix w = oracle::random_matrix(5, 3, rng, 0.5);
    const Objective obj{t, 1e-2};
    const Matrix H = oracle::dense_hessian(t, 1e-2, w);
    const Matrix g = oracle::random_matrix(5, 3, rng);
    const Vector xs = H.ldlt().solve(oracle::flatten(g));
    std::vector<double> energy;
    cg_solve([&](const Matrix& v) { return hvp(obj, w, v); }, g, 15, 0.0, [&](int, const Matrix& x) {
      const Vector e = oracle::flatten(x) - xs;
      energy.push_back(e.dot(H * e));
    });
    for (std::size_t k = 1; k < energy.size(); ++k) CHECK(energy[k] <= energy[k - 1] * (1.0 + 1e-9) + 1e-24);
  }
}

TEST_CASE("training with zero iterations returns the initial weights") {
  std::mt19937_64 rng(10);
  const TermSet t = oracle::random_terms(5, 4, 2, rng);
  const Matrix w0 = oracle::random_matrix(4, 2, rng);
  ProxyTrainConfig cfg;
  cfg.iterations = 0;
  CHECK(train_proxy(FixedTermSource(t), w0, cfg).w == w0);
}

TEST_CASE("minibatch Adam reaches the convex minimum and the loss decreases") {
  std::mt19937_64 rng(11);
  const Eigen::Index n = 20, m = 10, c = 3;
  std::vector<int> labels;
  for (Eigen::Index i = 0; i < n; ++i) labels.push_back(static_cast<int>(i % c));
  const TermSet t(oracle::random_rows(n, m, rng), TermSet::one_hot(labels, c));
  const double lambda = 1e-2;

  // Reference minimum: Newton iterations with the dense Hessian.
  Matrix w = Matrix::Zero(m, c);
  for (int it = 0; it < 50; ++it) {
    const Vector step = oracle::dense_hessian(t, lambda, w).ldlt().solve(oracle::flatten(oracle::gradient(t, lambda, w)));
    w -= oracle::unflatten(step, m, c);
  }
  const double f_star = oracle::objective(t, lambda, w);
  CHECK(oracle::gradient(t, lambda, w).norm() < 1e-10);

  const Objective full{t, lambda};
  std::vector<double> trace;
  ProxyTrainConfig cfg;
  cfg.iterations = 20000;
  cfg.lambda = lambda;
  cfg.seed = 3;
  cfg.on_step = [&](int, const Matrix& wk) { trace.push_back(objective_value(full, wk)); };
  const ProxyModel model = train_proxy(FixedTermSource(t), Matrix::Zero(m, c), cfg);
  CHECK(objective_value(full, model.w) - f_star < 1e-3);

  std::vector<double> avg;
  for (std::size_t k = 0; k + 100 <= trace.size(); k += 100) {
    double s = 0.0;
    for (std::size_t j = k; j < k + 100; ++j) s += trace[j];
    avg.push_back(s / 100.0);
  }
  double worst = 0.0;
  for (std::size_t k = 1; k < avg.size(); ++k) worst = std::max(worst, avg[k] - avg[k - 1]);
  // Adam keeps a step of order lr at the minimum; allow that limit cycle.
  CHECK(worst <= 1e-6);
}

TEST_CASE("training is deterministic in the seed") {
  std::mt19937_64 rng(12);
  const TermSet t = oracle::random_terms(30, 6, 3, rng);
  ProxyTrainConfig cfg;
  cfg.iterations = 200;
  cfg.batch_size = 7;
  cfg.seed = 9;
  const Matrix w0 = random_init_weights(6, 3, 1);
  CHECK(train_proxy(FixedTermSource(t), w0, cfg).w == train_proxy(FixedTermSource(t), w0, cfg).w);
}

TEST_CASE("term sets reject targets off the simplex") {
  CHECK_THROWS_AS(TermSet(RowMatrix::Ones(1, 2), RowMatrix::Constant(1, 2, 0.7)).validate(), InvalidArgument);
  CHECK_NOTHROW(TermSet(RowMatrix::Ones(1, 2), RowMatrix::Constant(1, 2, 0.5)).validate());
}

TEST_CASE("proxy checkpoints round-trip") {
  const auto dir = std::filesystem::temp_directory_path() / "bal_test_proxy";
  std::filesystem::create_directories(dir);
  ProxyModel model;
  model.w = random_init_weights(7, 4, 5);
  model.lambda = 3e-4;
  model.seed = 42;
  save_proxy(dir / "w.bin", model);
  const ProxyModel back = load_proxy(dir / "w.bin");
  CHECK(back.lambda == model.lambda);
  CHECK(back.seed == model.seed);
  CHECK((back.w - model.w).cwiseAbs().maxCoeff() < 1e-7);  // float32 storage
  std::filesystem::remove_all(dir);
}
