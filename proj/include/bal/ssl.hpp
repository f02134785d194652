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
#include <memory>
#include <string>
#include <vector>

#include "bal/common.hpp"
#include "bal/kernel.hpp"
#include "bal/nystrom.hpp"
#include "bal/proxy.hpp"

namespace bal {

enum class SslKind { label_propagation, kernel_logistic };

std::string to_string(SslKind kind);
SslKind ssl_kind_from_string(const std::string& name);

struct SslConfig {
  SslKind kind = SslKind::label_propagation;
  int classes = 0;

  // label_propagation
  double alpha = 0.99;
  double affinity_gamma = 0.0;  // <= 0 selects the nearest-neighbour median heuristic
  double tolerance = 1e-6;
  int max_iterations = 1000;

  // kernel_logistic (supervised control arm)
  KernelSpec kernel = KernelSpec::relu_ntk(3);
  std::size_t nystrom_m = 200;
  ProxyTrainConfig train;
  std::uint64_t seed = 0;
};

struct PropagationTrace {
  int iterations = 0;
  bool converged = false;
  std::vector<double> max_change;  // max |P_{t+1} - P_t| per iteration
};

// Trained semi-supervised (or control) model; immutable and shareable.
class SslModel {
 public:
  SslKind kind() const { return kind_; }
  int classes() const { return classes_; }
  const PropagationTrace& trace() const { return trace_; }
  double affinity_gamma() const { return gamma_; }
  // Simplex distributions of the training nodes (labeled rows first).
  const RowMatrix& node_distributions() const { return node_dist_; }

  // One distribution per row of X. Label propagation answers training nodes
  // transductively and other points by affinity-weighted averaging.
  RowMatrix predict(const RowMatrix& X) const;

 private:
  friend SslModel ssl_train(const RowMatrix&, const std::vector<int>&, const RowMatrix&, const SslConfig&);

  SslKind kind_ = SslKind::label_propagation;
  int classes_ = 0;
  RowMatrix nodes_;
  RowMatrix node_dist_;
  double gamma_ = 1.0;
  PropagationTrace trace_;
  std::shared_ptr<const NystromMap> nm_;
  ProxyModel proxy_;
};

SslModel ssl_train(const RowMatrix& labeled, const std::vector<int>& labels, const RowMatrix& unlabeled,
                   const SslConfig& cfg);

// Soft labels for pool rows; never hard-argmaxed.
RowMatrix pseudo_label(const SslModel& model, const RowMatrix& pool);

// Index of the largest entry, lowest index on ties.
int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& row);

// Fraction of rows whose argmax equals the label; rows with label < 0 are skipped.
double accuracy(const RowMatrix& distributions, const std::vector<int>& labels);

double evaluate(const SslModel& model, const RowMatrix& test, const std::vector<int>& labels);

}  // namespace bal
