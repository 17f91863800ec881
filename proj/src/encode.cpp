// src/encode.cpp

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

#include "wmil/encode.hpp"

#include <cmath>

#include "wmil/binary_io.hpp"
#include "wmil/error.hpp"

namespace wmil {

namespace {

void check_bag(const GmmModel& g, const Matrix& bag, const char* who) {
  if (bag.empty()) throw Error(std::string(who) + ": empty bag");
  if (bag.cols() != g.dim()) {
    throw Error(std::string(who) + ": instance dimension " + std::to_string(bag.cols()) +
                " != model dimension " + std::to_string(g.dim()));
  }
}

}  // namespace

void EncoderConfig::validate() const {
  if (!(relevance >= 0.0) || !std::isfinite(relevance)) {
    throw ConfigError("encoder: relevance factor must be a finite value >= 0");
  }
}

std::size_t fv_length(std::size_t k, std::size_t d, FvLayout layout) {
  return layout == FvLayout::mean_var ? 2 * k * d : (2 * d + 1) * k;
}

std::size_t sup_length(std::size_t k, std::size_t d, SupMode mode) {
  return mode == SupMode::mean_only ? k * d : 2 * k * d;
}

FisherVector encode_fv(const GmmModel& g, const Matrix& bag, FvLayout layout) {
  check_bag(g, bag, "encode_fv");
  const std::size_t k = g.components(), dim = g.dim(), m = bag.rows();
  FisherVector fv;
  fv.layout = layout;
  fv.values.assign(fv_length(k, dim, layout), 0.0);
  double* mu_block = fv.values.data();
  double* var_block = mu_block + k * dim;
  double* w_block = var_block + k * dim;

  std::vector<double> occ(k, 0.0), gamma(k);
  for (std::size_t j = 0; j < m; ++j) {
    const auto x = bag.row(j);
    g.posteriors(x, gamma);
    for (std::size_t c = 0; c < k; ++c) {
      const double r = gamma[c];
      occ[c] += r;
      if (r == 0.0) continue;
      const auto mu = g.means().row(c);
      const auto var = g.variances().row(c);
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = x[d] - mu[d];
        mu_block[c * dim + d] += r * diff / std::sqrt(var[d]);
        var_block[c * dim + d] += r * (diff * diff / var[d] - 1.0);
      }
    }
  }
  const double md = static_cast<double>(m);
  for (std::size_t c = 0; c < k; ++c) {
    const double w = g.weights()[c];
    const double s_mu = 1.0 / (md * std::sqrt(w));
    const double s_var = 1.0 / (md * std::sqrt(2.0 * w));
    for (std::size_t d = 0; d < dim; ++d) {
      mu_block[c * dim + d] *= s_mu;
      var_block[c * dim + d] *= s_var;
    }
    if (layout == FvLayout::mean_var_weight) w_block[c] = (occ[c] - md * w) * s_mu;
  }
  return fv;
}

FisherVector ifv_normalize(const FisherVector& fv) {
  if (fv.normalized) throw Error("ifv_normalize: vector is already normalized");
  FisherVector out{fv.values, fv.layout, true};
  double norm2 = 0.0;
  for (double& v : out.values) {
    v = std::copysign(std::sqrt(std::abs(v)), v);
    norm2 += v * v;
  }
  const double norm = std::sqrt(norm2);
  if (norm < 1e-300) {
    std::fill(out.values.begin(), out.values.end(), 0.0);
  } else {
    for (double& v : out.values) v /= norm;
  }
  return out;
}

Supervector encode_sup(const GmmModel& g, const Matrix& bag, const EncoderConfig& cfg) {
  cfg.validate();
  check_bag(g, bag, "encode_sup");
  const std::size_t k = g.components(), dim = g.dim();
  const double r = cfg.relevance;
  std::vector<double> occ(k, 0.0), gamma(k);
  Matrix first(k, dim), second(k, dim);
  for (std::size_t j = 0; j < bag.rows(); ++j) {
    const auto x = bag.row(j);
    g.posteriors(x, gamma);
    for (std::size_t c = 0; c < k; ++c) {
      const double p = gamma[c];
      occ[c] += p;
      auto s1 = first.row(c);
      auto s2 = second.row(c);
      for (std::size_t d = 0; d < dim; ++d) {
        s1[d] += p * x[d];
        s2[d] += p * x[d] * x[d];
      }
    }
  }
  Supervector sv;
  sv.mode = cfg.sup_mode;
  sv.relevance = r;
  sv.values.assign(sup_length(k, dim, cfg.sup_mode), 0.0);
  double* mean_block = sv.values.data();
  double* var_block = mean_block + k * dim;
  for (std::size_t c = 0; c < k; ++c) {
    const double denom = occ[c] + r;
    if (!(denom > 0.0)) {
      throw Error("encode_sup: zero occupancy for component " + std::to_string(c) +
                  " with relevance 0");
    }
    const auto mu = g.means().row(c);
    const auto var = g.variances().row(c);
    for (std::size_t d = 0; d < dim; ++d) {
      const double adapted = (first(c, d) + r * mu[d]) / denom;
      mean_block[c * dim + d] = adapted;
      if (cfg.sup_mode == SupMode::mean_var) {
        const double v = (second(c, d) + r * (mu[d] * mu[d] + var[d])) / denom - adapted * adapted;
        var_block[c * dim + d] = std::max(v, kSupVarianceFloor);
      }
    }
  }
  return sv;
}

EncodedBag encode_bag(const GmmModel& g, const Matrix& bag, const EncoderConfig& cfg) {
  EncodedBag out;
  if (cfg.kind == EncoderKind::fv) {
    auto fv = encode_fv(g, bag, cfg.fv_layout);
    if (cfg.ifv) fv = ifv_normalize(fv);
    out.kind = static_cast<std::uint8_t>(cfg.fv_layout == FvLayout::mean_var
                                             ? EncodedKind::fv_mean_var
                                             : EncodedKind::fv_mean_var_weight);
    if (fv.normalized) out.kind |= kNormalizedFlag;
    out.values = std::move(fv.values);
  } else {
    auto sv = encode_sup(g, bag, cfg);
    out.kind = static_cast<std::uint8_t>(cfg.sup_mode == SupMode::mean_var
                                             ? EncodedKind::sup_mean_var
                                             : EncodedKind::sup_mean_only);
    out.values = std::move(sv.values);
  }
  return out;
}

namespace {

void write_record(ByteWriter& w, const EncodedBag& e) {
  w.magic("WMENC1");
  w.u8(e.kind);
  w.u32(static_cast<std::uint32_t>(e.values.size()));
  w.f64s(e.values);
}

EncodedBag read_record(ByteReader& r) {
  r.expect_magic("WMENC1");
  EncodedBag e;
  e.kind = r.u8();
  const auto base = e.kind & ~kNormalizedFlag;
  if (base < 1 || base > 4) throw Error(r.source() + ": unknown encoder kind byte");
  e.values = r.f64s(r.u32());
  return e;
}

}  // namespace

void save_encoded_bag(const std::filesystem::path& path, const EncodedBag& e) {
  ByteWriter w;
  write_record(w, e);
  w.write_to(path);
}

EncodedBag load_encoded_bag(const std::filesystem::path& path) {
  auto r = ByteReader::from_file(path);
  auto e = read_record(r);
  if (!r.at_end()) throw Error(path.string() + ": trailing bytes after encoded bag");
  return e;
}

void save_encoded_table(const std::filesystem::path& path,
                        const std::map<std::string, EncodedBag>& table) {
  ByteWriter w;
  for (const auto& [id, e] : table) {
    w.str(id);
    write_record(w, e);
  }
  w.write_to(path);
}

std::map<std::string, EncodedBag> load_encoded_table(const std::filesystem::path& path) {
  auto r = ByteReader::from_file(path);
  std::map<std::string, EncodedBag> table;
  while (!r.at_end()) {
    auto id = r.str();
    auto e = read_record(r);
    if (!table.emplace(std::move(id), std::move(e)).second) {
      throw Error(path.string() + ": duplicate bag id in encoded table");
    }
  }
  return table;
}

}  // namespace wmil
