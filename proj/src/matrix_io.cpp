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

#include "bal/matrix_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace bal {
namespace {

void put_i32(std::ostream& os, std::int32_t v) {
  const auto u = static_cast<std::uint32_t>(v);
  const char bytes[4] = {static_cast<char>(u & 0xff), static_cast<char>((u >> 8) & 0xff),
                         static_cast<char>((u >> 16) & 0xff), static_cast<char>((u >> 24) & 0xff)};
  os.write(bytes, 4);
}

std::int32_t get_i32(const unsigned char* p) {
  const std::uint32_t u = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) |
                          (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
  return static_cast<std::int32_t>(u);
}

}  // namespace

Vector MatrixFile::record(std::size_t i) const {
  if (i >= static_cast<std::size_t>(count)) throw InvalidArgument("MatrixFile::record: index out of range");
  const std::size_t n = record_size();
  Vector v(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) v[static_cast<Eigen::Index>(k)] = values[i * n + k];
  return v;
}

RowMatrix MatrixFile::as_rows() const {
  const std::size_t n = record_size();
  RowMatrix m(count, static_cast<Eigen::Index>(n));
  for (std::int32_t i = 0; i < count; ++i)
    for (std::size_t k = 0; k < n; ++k) m(i, static_cast<Eigen::Index>(k)) = values[i * n + k];
  return m;
}

MatrixFile MatrixFile::from_rows(const RowMatrix& m, std::int32_t rows, std::int32_t cols) {
  if (static_cast<Eigen::Index>(rows) * cols != m.cols())
    throw InvalidArgument("MatrixFile::from_rows: record shape does not match row width");
  MatrixFile f;
  f.count = static_cast<std::int32_t>(m.rows());
  f.rows = rows;
  f.cols = cols;
  f.values.resize(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k)
      f.values[static_cast<std::size_t>(i * m.cols() + k)] = static_cast<float>(m(i, k));
  return f;
}

MatrixFile MatrixFile::from_matrix(const Matrix& m) {
  MatrixFile f;
  f.count = 1;
  f.rows = static_cast<std::int32_t>(m.rows());
  f.cols = static_cast<std::int32_t>(m.cols());
  f.values.resize(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      f.values[static_cast<std::size_t>(r * m.cols() + c)] = static_cast<float>(m(r, c));
  return f;
}

Matrix MatrixFile::single_matrix() const {
  if (count != 1) throw InvalidArgument("MatrixFile::single_matrix: file holds " + std::to_string(count) + " records");
  Matrix m(rows, cols);
  for (std::int32_t r = 0; r < rows; ++r)
    for (std::int32_t c = 0; c < cols; ++c) m(r, c) = values[static_cast<std::size_t>(r) * cols + c];
  return m;
}

void write_matrix_file(const std::filesystem::path& path, const MatrixFile& file) {
  if (file.values.size() != static_cast<std::size_t>(file.count) * file.record_size())
    throw InvalidArgument("write_matrix_file: value count does not match header");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IngestError("cannot open for writing: " + path.string());
  os.write(kMatrixMagic.data(), 4);
  put_i32(os, file.count);
  put_i32(os, file.rows);
  put_i32(os, file.cols);
  for (float v : file.values) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    put_i32(os, static_cast<std::int32_t>(bits));
  }
  if (!os) throw IngestError("write failed: " + path.string());
}

MatrixFile read_matrix_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestError("cannot open matrix file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMatrixMagic.data(), 4) != 0)
    throw IngestError("not a matrix file (bad magic): " + path.string());
  MatrixFile f;
  f.count = get_i32(bytes.data() + 4);
  f.rows = get_i32(bytes.data() + 8);
  f.cols = get_i32(bytes.data() + 12);
  if (f.count < 0 || f.rows < 0 || f.cols < 0) throw IngestError("negative dimension in header: " + path.string());
  const std::size_t n = static_cast<std::size_t>(f.count) * f.record_size();
  if (bytes.size() != 16 + 4 * n) throw IngestError("truncated or oversized matrix file: " + path.string());
  f.values.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    f.values[i] = std::bit_cast<float>(static_cast<std::uint32_t>(get_i32(bytes.data() + 16 + 4 * i)));
  return f;
}

}  // namespace bal
