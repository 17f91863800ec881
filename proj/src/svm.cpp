// src/svm.cpp

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

#include "wmil/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <string>

#include "wmil/binary_io.hpp"
#include "wmil/error.hpp"

namespace wmil {

void MilTrainConfig::validate() const {
  if (!(C > 0.0) || !std::isfinite(C)) throw ConfigError("svm: C must be positive");
  if (max_outer_iters < 1) throw ConfigError("svm: max_outer_iters must be >= 1");
  if (!(solver_tol > 0.0)) throw ConfigError("svm: solver_tol must be positive");
  if (solver_max_iters < 1) throw ConfigError("svm: solver_max_iters must be >= 1");
  if (!(bias_scale > 0.0)) throw ConfigError("svm: bias_scale must be positive");
}

LinearModel train_linear_svm(const Matrix& x, std::span<const int> y, const MilTrainConfig& cfg,
                             SvmTrainInfo* info) {
  cfg.validate();
  const std::size_t n = x.rows(), dim = x.cols();
  if (y.size() != n) throw Error("train_linear_svm: label count does not match row count");
  bool has_pos = false, has_neg = false;
  for (int v : y) {
    if (v == 1) {
      has_pos = true;
    } else if (v == -1) {
      has_neg = true;
    } else {
      throw Error("train_linear_svm: labels must be +1 or -1");
    }
  }
  if (!has_pos || !has_neg) throw Error("train_linear_svm: need examples of both classes");
  for (double v : x.values()) {
    if (!std::isfinite(v)) throw Error("train_linear_svm: non-finite feature value");
  }

  const double bias = cfg.bias_scale;
  const double upper = cfg.C;
  std::vector<double> w(dim, 0.0);
  double wb = 0.0;  // weight of the constant bias feature
  std::vector<double> alpha(n, 0.0), qd(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.row(i);
    qd[i] = dot(xi, xi) + bias * bias;
  }

  std::vector<std::size_t> index(n);
  for (std::size_t i = 0; i < n; ++i) index[i] = i;
  std::mt19937_64 rng(cfg.seed);

  constexpr double inf = std::numeric_limits<double>::infinity();
  double pg_max_old = inf, pg_min_old = -inf;
  std::size_t active = n;
  int iter = 0;
  bool converged = false;
  double spread = inf;
  while (iter < cfg.solver_max_iters) {
    double pg_max_new = -inf, pg_min_new = inf;
    std::shuffle(index.begin(), index.begin() + static_cast<std::ptrdiff_t>(active), rng);
    for (std::size_t s = 0; s < active; ++s) {
      const std::size_t i = index[s];
      const double yi = y[i];
      const auto xi = x.row(i);
      const double g = yi * (dot(w, xi) + wb * bias) - 1.0;
      double pg = 0.0;
      if (alpha[i] == 0.0) {
        if (g > pg_max_old) {
          --active;
          std::swap(index[s], index[active]);
          --s;
          continue;
        }
        if (g < 0.0) pg = g;
      } else if (alpha[i] == upper) {
        if (g < pg_min_old) {
          --active;
          std::swap(index[s], index[active]);
          --s;
          continue;
        }
        if (g > 0.0) pg = g;
      } else {
        pg = g;
      }
      pg_max_new = std::max(pg_max_new, pg);
      pg_min_new = std::min(pg_min_new, pg);
      if (std::abs(pg) > 1e-12) {
        const double old = alpha[i];
        alpha[i] = std::clamp(old - g / qd[i], 0.0, upper);
        const double step = (alpha[i] - old) * yi;
        for (std::size_t d = 0; d < dim; ++d) w[d] += step * xi[d];
        wb += step * bias;
      }
    }
    ++iter;
    spread = pg_max_new - pg_min_new;
    if (spread <= cfg.solver_tol) {
      if (active == n) {
        converged = true;
        break;
      }
      // Re-check everything before declaring convergence.
      active = n;
      pg_max_old = inf;
      pg_min_old = -inf;
      continue;
    }
    pg_max_old = pg_max_new <= 0.0 ? inf : pg_max_new;
    pg_min_old = pg_min_new >= 0.0 ? -inf : pg_min_new;
  }
  if (info != nullptr) *info = {iter, converged, spread};
  return {std::move(w), wb * bias, cfg.C};
}

double decision(const LinearModel& m, std::span<const double> x) {
  if (x.size() != m.w.size()) {
    throw Error("decision: input dimension " + std::to_string(x.size()) +
                " != model dimension " + std::to_string(m.w.size()));
  }
  return dot(m.w, x) + m.b;
}

double svm_primal_objective(const LinearModel& m, const Matrix& x, std::span<const int> y,
                            double bias_scale) {
  const double vb = m.b / bias_scale;
  double obj = 0.5 * (dot(m.w, m.w) + vb * vb);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    obj += m.C * std::max(0.0, 1.0 - y[i] * decision(m, x.row(i)));
  }
  return obj;
}

void save_linear_model(const std::filesystem::path& path, const LinearModel& m,
                       const nlohmann::json& sidecar) {
  ByteWriter w;
  w.magic("WMSVM1");
  w.u32(static_cast<std::uint32_t>(m.w.size()));
  w.f64(m.b);
  w.f64s(m.w);
  w.write_to(path);
  nlohmann::json meta = sidecar;
  meta["C"] = m.C;
  auto meta_path = path;
  meta_path += ".json";
  std::ofstream out(meta_path, std::ios::trunc);
  if (!out) throw Error("cannot write " + meta_path.string());
  out << meta.dump(2) << '\n';
}

LinearModel load_linear_model(const std::filesystem::path& path) {
  auto r = ByteReader::from_file(path);
  r.expect_magic("WMSVM1");
  const std::size_t dim = r.u32();
  LinearModel m;
  m.b = r.f64();
  m.w = r.f64s(dim);
  if (!r.at_end()) throw Error(path.string() + ": trailing bytes after SVM model");
  auto meta_path = path;
  meta_path += ".json";
  if (std::ifstream in(meta_path); in) {
    const auto meta = nlohmann::json::parse(in);
    if (meta.contains("C")) m.C = meta["C"].get<double>();
  }
  return m;
}

}  // namespace wmil
