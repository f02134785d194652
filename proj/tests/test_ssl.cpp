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

#include <algorithm>
#include <cmath>
#include <random>

#include "bal/dataset.hpp"
#include "bal/ssl.hpp"
#include "oracles.hpp"

using namespace bal;

namespace {

RowMatrix blob(const Vector& center, Eigen::Index n, double sd, std::mt19937_64& rng) {
  RowMatrix X = oracle::random_rows(n, center.size(), rng, sd);
  X.rowwise() += center.transpose();
  return X;
}

SslConfig lp(int classes) {
  SslConfig cfg;
  cfg.classes = classes;
  return cfg;
}

struct Blobs {
  RowMatrix labeled, unlabeled;
  std::vector<int> labels, truth;
};

Blobs two_blobs(std::mt19937_64& rng) {
  Vector a(2), b(2);
  a << -3.0, 0.0;
  b << 3.0, 0.0;
  Blobs s;
  s.labeled = RowMatrix(2, 2);
  s.labeled.row(0) = a.transpose();
  s.labeled.row(1) = b.transpose();
  s.labels = {0, 1};
  const RowMatrix A = blob(a, 40, 0.4, rng), B = blob(b, 40, 0.4, rng);
  s.unlabeled = RowMatrix(80, 2);
  s.unlabeled << A, B;
  for (int i = 0; i < 80; ++i) s.truth.push_back(i < 40 ? 0 : 1);
  return s;
}

}  // namespace

TEST_CASE("two separated blobs with one label each propagate confidently") {
  std::mt19937_64 rng(1);
  const Blobs s = two_blobs(rng);
  const SslModel model = ssl_train(s.labeled, s.labels, s.unlabeled, lp(2));
  CHECK(model.trace().converged);
  const RowMatrix P = pseudo_label(model, s.unlabeled);
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    CHECK(argmax_lowest(P.row(i)) == s.truth[static_cast<std::size_t>(i)]);
    CHECK(P.row(i).maxCoeff() > 0.9);
  }
}

TEST_CASE("without unlabeled points the labeled rows reproduce their labels") {
  std::mt19937_64 rng(2);
  const RowMatrix X = oracle::random_rows(6, 3, rng);
  const std::vector<int> y{0, 1, 2, 0, 1, 2};
  const SslModel model = ssl_train(X, y, RowMatrix(0, 3), lp(3));
  const RowMatrix P = model.predict(X);
  for (int i = 0; i < 6; ++i) CHECK(argmax_lowest(P.row(i)) == y[static_cast<std::size_t>(i)]);
  CHECK(accuracy(P, y) == 1.0);
}

TEST_CASE("alpha = 0 gives the affinity-weighted average of the labels in one step") {
  std::mt19937_64 rng(3);
  const RowMatrix L = oracle::random_rows(4, 2, rng), U = oracle::random_rows(5, 2, rng);
  const std::vector<int> y{0, 1, 1, 0};
  SslConfig cfg = lp(2);
  cfg.alpha = 0.0;
  cfg.affinity_gamma = 0.5;
  const SslModel model = ssl_train(L, y, U, cfg);
  CHECK(model.trace().iterations == 1);
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    Vector avg = Vector::Zero(2);
    for (Eigen::Index j = 0; j < L.rows(); ++j) avg[y[j]] += std::exp(-0.5 * (U.row(i) - L.row(j)).squaredNorm());
    avg /= avg.sum();
    const auto row = model.node_distributions().row(L.rows() + i);
    CHECK(std::abs(row[0] - avg[0]) < 1e-12);
    CHECK(std::abs(row[1] - avg[1]) < 1e-12);
  }
}

TEST_CASE("a pool point identical to a labeled point takes its label") {
  std::mt19937_64 rng(4);
  const RowMatrix L = oracle::random_rows(6, 3, rng);
  const std::vector<int> y{0, 1, 2, 2, 1, 0};
  const RowMatrix U = oracle::random_rows(10, 3, rng);
  const SslModel model = ssl_train(L, y, U, lp(3));
  for (Eigen::Index i = 0; i < L.rows(); ++i)
    CHECK(argmax_lowest(pseudo_label(model, L.row(i)).row(0)) == y[static_cast<std::size_t>(i)]);
}

TEST_CASE("pseudo-labels are distributions") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const RowMatrix L = oracle::random_rows(4, 3, rng), U = oracle::random_rows(30, 3, rng, 3.0);
    const SslModel model = ssl_train(L, {0, 1, 2, 3}, U, lp(4));
    const RowMatrix P = pseudo_label(model, oracle::random_rows(20, 3, rng, 10.0));
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
      CHECK(std::abs(P.row(i).sum() - 1.0) <= 1e-8);
      CHECK(P.row(i).minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("iterate change is non-increasing and labeled rows stay clamped") {
  std::mt19937_64 rng(6);
  for (double alpha : {0.3, 0.9, 0.99}) {
    const RowMatrix L = oracle::random_rows(5, 2, rng), U = oracle::random_rows(60, 2, rng);
    SslConfig cfg = lp(3);
    cfg.alpha = alpha;
    const std::vector<int> y{0, 1, 2, 0, 1};
    const SslModel model = ssl_train(L, y, U, cfg);
    const auto& ch = model.trace().max_change;
    for (std::size_t k = 2; k < ch.size(); ++k) CHECK(ch[k] <= ch[k - 1] + 1e-15);
    const RowMatrix onehot = TermSet::one_hot(y, 3);
    CHECK((model.node_distributions().topRows(5) - onehot).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("training is deterministic") {
  std::mt19937_64 rng(7);
  const RowMatrix L = oracle::random_rows(6, 4, rng), U = oracle::random_rows(50, 4, rng);
  const std::vector<int> y{0, 1, 0, 1, 0, 1};
  for (auto kind : {SslKind::label_propagation, SslKind::kernel_logistic}) {
    SslConfig cfg = lp(2);
    cfg.kind = kind;
    cfg.nystrom_m = 20;
    cfg.train.iterations = 100;
    cfg.seed = 5;
    const RowMatrix a = ssl_train(L, y, U, cfg).predict(U), b = ssl_train(L, y, U, cfg).predict(U);
    CHECK(a == b);
  }
}

TEST_CASE("label propagation beats the supervised control on clustered data") {
  GaussianClustersConfig gc;
  gc.dim = 4;
  gc.spread = 0.3;
  gc.seed = 7;
  const Dataset ds = make_gaussian_clusters(gc);
  double lp_acc = 0.0, ctl_acc = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    auto train = ds.indices(Split::train);
    std::shuffle(train.begin(), train.end(), rng);
    std::vector<SampleIndex> lab, pool;
    std::vector<bool> seen(10, false);
    for (auto i : train) {
      const int k = ds.labels[i];
      if (!seen[static_cast<std::size_t>(k)]) {
        seen[static_cast<std::size_t>(k)] = true;
        lab.push_back(i);
      } else {
        pool.push_back(i);
      }
    }
    RowMatrix L(10, gc.dim), U(static_cast<Eigen::Index>(pool.size()), gc.dim);
    std::vector<int> y, truth;
    for (std::size_t i = 0; i < lab.size(); ++i) {
      L.row(static_cast<Eigen::Index>(i)) = ds.features.row(static_cast<Eigen::Index>(lab[i]));
      y.push_back(ds.labels[lab[i]]);
    }
    for (std::size_t i = 0; i < pool.size(); ++i) {
      U.row(static_cast<Eigen::Index>(i)) = ds.features.row(static_cast<Eigen::Index>(pool[i]));
      truth.push_back(ds.labels[pool[i]]);
    }
    lp_acc += accuracy(pseudo_label(ssl_train(L, y, U, lp(10)), U), truth) / 5.0;
    SslConfig ctl = lp(10);
    ctl.kind = SslKind::kernel_logistic;
    ctl.kernel = KernelSpec::rbf(4.0);
    ctl.seed = seed;
    ctl_acc += accuracy(ssl_train(L, y, U, ctl).predict(U), truth) / 5.0;
  }
  MESSAGE("label propagation " << lp_acc << ", control " << ctl_acc);
  CHECK(lp_acc >= ctl_acc);
}

TEST_CASE("accuracy edge cases") {
  RowMatrix always0 = RowMatrix::Zero(4, 3);
  always0.col(0).setOnes();
  CHECK(accuracy(always0, {0, 0, 0, 0}) == 1.0);
  CHECK(accuracy(always0, {1, 2, 1, 2}) == 0.0);
  CHECK(std::isnan(accuracy(always0, {-1, -1, -1, -1})));
  CHECK(accuracy(always0, {0, -1, 1, -1}) == 0.5);
}

TEST_CASE("random predictions score about 1/c") {
  std::mt19937_64 rng(8);
  const int c = 5, n = 20000;
  const RowMatrix P = oracle::random_simplex_rows(n, c, rng);
  std::vector<int> y;
  for (int i = 0; i < n; ++i) y.push_back(i % c);
  const double p = 1.0 / c, sigma = std::sqrt(p * (1 - p) / n);
  CHECK(std::abs(accuracy(P, y) - p) <= 3.0 * sigma);
}

TEST_CASE("argmax takes the lowest index on ties") {
  Eigen::RowVectorXd r(4);
  r << 0.25, 0.25, 0.25, 0.25;
  CHECK(argmax_lowest(r) == 0);
  r << 0.1, 0.4, 0.4, 0.1;
  CHECK(argmax_lowest(r) == 1);
}

TEST_CASE("invalid training inputs are rejected") {
  const RowMatrix L = RowMatrix::Ones(2, 2);
  CHECK_THROWS_AS(ssl_train(L, {0, 0}, RowMatrix(0, 2), lp(2)), InvalidArgument);  // class 1 missing
  CHECK_THROWS_AS(ssl_train(L, {0, 3}, RowMatrix(0, 2), lp(2)), InvalidArgument);
  SslConfig bad = lp(2);
  bad.alpha = 1.0;
  CHECK_THROWS_AS(ssl_train(L, {0, 1}, RowMatrix(0, 2), bad), InvalidArgument);
  CHECK(ssl_kind_from_string("kernel_logistic") == SslKind::kernel_logistic);
}
