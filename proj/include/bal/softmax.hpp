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

#include <cmath>

#include "bal/common.hpp"

namespace bal {

// Max-shifted softmax.
inline Vector softmax(const Eigen::Ref<const Vector>& logits) {
  const double shift = logits.maxCoeff();
  Vector p = (logits.array() - shift).exp();
  return p / p.sum();
}

// Row-wise softmax of a (terms x classes) logit matrix.
inline RowMatrix softmax_rows(const RowMatrix& logits) {
  RowMatrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double shift = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - shift).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

}  // namespace bal
