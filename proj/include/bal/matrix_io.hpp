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

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "bal/common.hpp"

namespace bal {

// Flat binary matrix file shared by the feature cache, checkpoints and the
// persisted Nyström factor:
//
//   bytes 0..3    magic "BALM"
//   bytes 4..7    count   (int32 LE)  number of records
//   bytes 8..11   rows    (int32 LE)  rows per record
//   bytes 12..15  cols    (int32 LE)  cols per record
//   then count*rows*cols float32 LE values, record-major, each record row-major.
inline constexpr std::array<char, 4> kMatrixMagic{'B', 'A', 'L', 'M'};

struct MatrixFile {
  std::int32_t count = 0;
  std::int32_t rows = 0;
  std::int32_t cols = 0;
  std::vector<float> values;

  std::size_t record_size() const { return static_cast<std::size_t>(rows) * cols; }

  // Record i flattened row-major into a double vector.
  Vector record(std::size_t i) const;
  // All records as a count x (rows*cols) sample-major matrix.
  RowMatrix as_rows() const;

  static MatrixFile from_rows(const RowMatrix& m, std::int32_t rows, std::int32_t cols);
  static MatrixFile from_matrix(const Matrix& m);
  Matrix single_matrix() const;
};

void write_matrix_file(const std::filesystem::path& path, const MatrixFile& file);
MatrixFile read_matrix_file(const std::filesystem::path& path);

}  // namespace bal
