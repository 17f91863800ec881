// include/wmil/binary_io.hpp

// Copyright 2026  The wmil Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wmil/matrix.hpp"

namespace wmil {

// Little-endian byte sink used by every binary file format in the project.
class ByteWriter {
 public:
  void magic(std::string_view tag) { bytes_.insert(bytes_.end(), tag.begin(), tag.end()); }
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v);
  void f64(double v);
  void f64s(std::span<const double> vs) {
    for (double v : vs) f64(v);
  }
  void str(std::string_view s);  // u32 length prefix

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  void write_to(const std::filesystem::path& path) const;

 private:
  std::vector<std::uint8_t> bytes_;
};

// Little-endian byte source; throws Error on truncation or bad magic.
class ByteReader {
 public:
  ByteReader(std::vector<std::uint8_t> bytes, std::string source);
  static ByteReader from_file(const std::filesystem::path& path);

  void expect_magic(std::string_view tag);
  bool has_magic(std::string_view tag) const;
  std::uint8_t u8();
  std::uint32_t u32();
  double f64();
  std::vector<double> f64s(std::size_t n);
  std::string str();

  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  const std::string& source() const { return source_; }

 private:
  void need(std::size_t n) const;

  std::vector<std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::string source_;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

// 64-bit FNV-1a, used for content-addressed skip checks.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view text, std::uint64_t seed = 0xcbf29ce484222325ULL);

// Feature matrix file: "WMFEAT1", u32 rows, u32 cols, row-major f64.
inline constexpr std::string_view kFeatureMagic = "WMFEAT1";
void save_feature_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix load_feature_matrix(const std::filesystem::path& path);
bool is_feature_matrix_file(const std::filesystem::path& path);

}  // namespace wmil
