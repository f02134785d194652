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

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace bal {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// Sample-major storage: one row per sample.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using SampleIndex = std::size_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised for malformed input files (WAV, manifests, caches).
class IngestError : public Error {
 public:
  using Error::Error;
};

// Shape or domain precondition violated by the caller.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Non-finite values or solver breakdown.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace bal
