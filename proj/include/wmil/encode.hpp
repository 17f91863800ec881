// include/wmil/encode.hpp

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
#include <map>
#include <string>
#include <vector>

#include "wmil/gmm.hpp"
#include "wmil/matrix.hpp"

namespace wmil {

// Fisher vector layouts. Blocks are global: all K mean blocks, then all K
// variance blocks, then (optionally) the K weight terms.
enum class FvLayout { mean_var, mean_var_weight };

struct FisherVector {
  std::vector<double> values;
  FvLayout layout = FvLayout::mean_var;
  bool normalized = false;
};

enum class SupMode { mean_only, mean_var };

struct Supervector {
  std::vector<double> values;  // K mean blocks, then K variance blocks in mean_var mode
  SupMode mode = SupMode::mean_var;
  double relevance = 16.0;
};

enum class EncoderKind { fv, sup };

struct EncoderConfig {
  EncoderKind kind = EncoderKind::fv;
  FvLayout fv_layout = FvLayout::mean_var;
  bool ifv = true;             // fv only: signed sqrt + L2
  SupMode sup_mode = SupMode::mean_var;
  double relevance = 16.0;     // sup only

  void validate() const;
};

std::size_t fv_length(std::size_t k, std::size_t d, FvLayout layout);
std::size_t sup_length(std::size_t k, std::size_t d, SupMode mode);

// Gradient statistics of the bag w.r.t. the UBM means and variances (and
// weights when requested), each normalised by 1/(m sqrt(w_k)) or
// 1/(m sqrt(2 w_k)).
FisherVector encode_fv(const GmmModel& g, const Matrix& bag, FvLayout layout = FvLayout::mean_var);

// Signed square root followed by L2 normalisation. A vector with norm below
// 1e-300 maps to zeros. Throws if `fv` is already normalised.
FisherVector ifv_normalize(const FisherVector& fv);

// MAP-adapted means (and variances) of the UBM given the bag, with relevance
// factor r. Adapted variances are floored at kSupVarianceFloor.
Supervector encode_sup(const GmmModel& g, const Matrix& bag, const EncoderConfig& cfg);

inline constexpr double kSupVarianceFloor = 1e-8;

// Kind byte of the encoded-bag file.
enum class EncodedKind : std::uint8_t {
  fv_mean_var = 1,
  fv_mean_var_weight = 2,
  sup_mean_var = 3,
  sup_mean_only = 4,
};
inline constexpr std::uint8_t kNormalizedFlag = 0x80;

struct EncodedBag {
  std::uint8_t kind = 0;  // EncodedKind, possibly | kNormalizedFlag
  std::vector<double> values;

  bool operator==(const EncodedBag&) const = default;
};

// Applies the configured encoder (and IFV normalisation for fv when enabled).
EncodedBag encode_bag(const GmmModel& g, const Matrix& bag, const EncoderConfig& cfg);

// Single record: "WMENC1", kind byte, u32 length, f64 values.
void save_encoded_bag(const std::filesystem::path& path, const EncodedBag& e);
EncodedBag load_encoded_bag(const std::filesystem::path& path);

// Table: repeated [u32 id length, id bytes, single record] keyed by bag id.
void save_encoded_table(const std::filesystem::path& path,
                        const std::map<std::string, EncodedBag>& table);
std::map<std::string, EncodedBag> load_encoded_table(const std::filesystem::path& path);

}  // namespace wmil
