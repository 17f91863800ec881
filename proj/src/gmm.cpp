// src/gmm.cpp

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

#include "wmil/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include "wmil/binary_io.hpp"
#include "wmil/error.hpp"

namespace wmil {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

GmmModel::GmmModel(std::vector<double> weights, Matrix means, Matrix variances)
    : weights_(std::move(weights)), means_(std::move(means)), variances_(std::move(variances)) {
  const std::size_t k = weights_.size();
  if (k == 0) throw Error("gmm: no components");
  if (means_.rows() != k || variances_.rows() != k || means_.cols() != variances_.cols() ||
      means_.cols() == 0) {
    throw Error("gmm: parameter shapes disagree");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw Error("gmm: weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error("gmm: weights sum to " + std::to_string(total) + ", expected 1");
  }
  for (double& w : weights_) w /= total;
  inv_var_ = Matrix(k, dim());
  log_const_.assign(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    double log_det = 0.0;
    for (std::size_t d = 0; d < dim(); ++d) {
      const double v = variances_(c, d);
      if (!(v > 0.0) || !std::isfinite(v)) throw Error("gmm: variances must be positive");
      if (!std::isfinite(means_(c, d))) throw Error("gmm: non-finite mean");
      inv_var_(c, d) = 1.0 / v;
      log_det += std::log(v);
    }
    log_const_[c] = std::log(weights_[c]) - 0.5 * (static_cast<double>(dim()) * kLog2Pi + log_det);
  }
}

void GmmModel::log_joint(std::span<const double> x, std::span<double> out) const {
  if (x.size() != dim()) {
    throw Error("gmm: instance dimension " + std::to_string(x.size()) + " != model dimension " +
                std::to_string(dim()));
  }
  for (std::size_t c = 0; c < components(); ++c) {
    const auto mu = means_.row(c);
    const auto iv = inv_var_.row(c);
    double q = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
      const double diff = x[d] - mu[d];
      q += diff * diff * iv[d];
    }
    out[c] = log_const_[c] - 0.5 * q;
  }
}

double GmmModel::posteriors(std::span<const double> x, std::span<double> out) const {
  log_joint(x, out);
  const double lse = log_sum_exp(out);
  for (double& v : out) v = std::exp(v - lse);
  return lse;
}

std::vector<double> GmmModel::posteriors(std::span<const double> x) const {
  std::vector<double> out(components());
  posteriors(x, out);
  return out;
}

double GmmModel::log_likelihood(std::span<const double> x) const {
  std::vector<double> tmp(components());
  log_joint(x, tmp);
  return log_sum_exp(tmp);
}

void GmmFitConfig::validate() const {
  if (components < 1) throw ConfigError("gmm: need at least one component");
  if (max_iters < 1) throw ConfigError("gmm: max_iters must be >= 1");
  if (!(rel_tol > 0.0)) throw ConfigError("gmm: rel_tol must be positive");
  if (!(variance_floor > 0.0)) throw ConfigError("gmm: variance_floor must be positive");
  if (kmeans_iters < 0) throw ConfigError("gmm: kmeans_iters must be >= 0");
}

namespace {

struct Moments {
  std::vector<double> mean;
  std::vector<double> var;
};

Moments global_moments(const Matrix& data) {
  const std::size_t n = data.rows(), dim = data.cols();
  Moments m{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dim; ++d) m.mean[d] += data(i, d);
  }
  for (auto& v : m.mean) v /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = data(i, d) - m.mean[d];
      m.var[d] += diff * diff;
    }
  }
  for (auto& v : m.var) v /= static_cast<double>(n);
  return m;
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

// Farthest-point seeding from a random start, then a few Lloyd iterations.
// Returns hard responsibilities.
Matrix kmeans_init(const Matrix& data, const GmmFitConfig& cfg, std::mt19937_64& rng) {
  const std::size_t n = data.rows(), k = static_cast<std::size_t>(cfg.components);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  Matrix centres(0, 0);
  centres.append_row(data.row(pick(rng)));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (centres.rows() < k) {
    const auto last = centres.row(centres.rows() - 1);
    std::size_t best = 0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], sq_dist(data.row(i), last));
      if (nearest[i] > nearest[best]) best = i;
    }
    centres.append_row(data.row(best));
  }
  std::vector<std::size_t> assign(n, 0);
  auto assign_all = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = sq_dist(data.row(i), centres.row(c));
        if (d < best) {
          best = d;
          assign[i] = c;
        }
      }
    }
  };
  assign_all();
  for (int it = 0; it < cfg.kmeans_iters; ++it) {
    Matrix sums(k, data.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto s = sums.row(assign[i]);
      const auto x = data.row(i);
      for (std::size_t d = 0; d < x.size(); ++d) s[d] += x[d];
      ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // keep the old centre
      auto dst = centres.row(c);
      const auto s = sums.row(c);
      for (std::size_t d = 0; d < dst.size(); ++d) dst[d] = s[d] / static_cast<double>(counts[c]);
    }
    assign_all();
  }
  Matrix resp(n, k);
  for (std::size_t i = 0; i < n; ++i) resp(i, assign[i]) = 1.0;
  return resp;
}

Matrix random_init(const Matrix& data, const GmmFitConfig& cfg, std::mt19937_64& rng) {
  const std::size_t k = static_cast<std::size_t>(cfg.components);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix resp(data.rows(), k);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < k; ++c) s += (resp(i, c) = u(rng) + 1e-3);
    for (std::size_t c = 0; c < k; ++c) resp(i, c) /= s;
  }
  return resp;
}

// Below this occupancy a component is treated as empty and reseeded.
constexpr double kMinOccupancy = 1e-8;

GmmModel m_step(const Matrix& data, const Matrix& resp, const std::vector<double>& floor,
                const std::vector<double>& global_var,
                const std::vector<double>& row_loglik, int& reseeds) {
  const std::size_t n = data.rows(), dim = data.cols(), k = resp.cols();
  std::vector<double> occ(k, 0.0);
  Matrix means(k, dim), vars(k, dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = data.row(i);
    for (std::size_t c = 0; c < k; ++c) {
      const double r = resp(i, c);
      if (r == 0.0) continue;
      occ[c] += r;
      auto mu = means.row(c);
      for (std::size_t d = 0; d < dim; ++d) mu[d] += r * x[d];
    }
  }
  std::vector<bool> empty(k, false);
  for (std::size_t c = 0; c < k; ++c) {
    if (occ[c] < kMinOccupancy * static_cast<double>(n) || occ[c] <= 0.0) {
      empty[c] = true;
      continue;
    }
    for (auto& v : means.row(c)) v /= occ[c];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = data.row(i);
    for (std::size_t c = 0; c < k; ++c) {
      const double r = resp(i, c);
      if (r == 0.0 || empty[c]) continue;
      const auto mu = means.row(c);
      auto var = vars.row(c);
      for (std::size_t d = 0; d < dim; ++d) var[d] += r * (x[d] - mu[d]) * (x[d] - mu[d]);
    }
  }
  std::vector<double> weights(k);
  std::vector<bool> used(n, false);
  for (std::size_t c = 0; c < k; ++c) {
    if (empty[c]) {
      // Reseed on the worst-explained row not already used as a seed.
      std::size_t worst = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (used[i]) continue;
        if (worst == n || row_loglik[i] < row_loglik[worst]) worst = i;
      }
      used[worst] = true;
      std::copy(data.row(worst).begin(), data.row(worst).end(), means.row(c).begin());
      std::copy(global_var.begin(), global_var.end(), vars.row(c).begin());
      weights[c] = 1.0 / static_cast<double>(n);
      ++reseeds;
    } else {
      for (auto& v : vars.row(c)) v /= occ[c];
      weights[c] = occ[c] / static_cast<double>(n);
    }
    auto var = vars.row(c);
    for (std::size_t d = 0; d < dim; ++d) var[d] = std::max(var[d], floor[d]);
  }
  double total = 0.0;
  for (double w : weights) total += w;
  for (double& w : weights) w /= total;
  return GmmModel(std::move(weights), std::move(means), std::move(vars));
}

void check_distinct_rows(const Matrix& data, std::size_t k) {
  std::set<std::vector<double>> distinct;
  for (std::size_t i = 0; i < data.rows() && distinct.size() < k; ++i) {
    distinct.emplace(data.row(i).begin(), data.row(i).end());
  }
  if (distinct.size() < k) {
    std::string comps;
    for (std::size_t c = distinct.size(); c < k; ++c) {
      comps += (comps.empty() ? "" : ", ") + std::to_string(c);
    }
    throw Error("fit_gmm: degenerate data, only " + std::to_string(distinct.size()) +
                " distinct rows for " + std::to_string(k) +
                " components; collapsed components: " + comps);
  }
}

}  // namespace

GmmFit fit_gmm(const Matrix& data, const GmmFitConfig& cfg) {
  cfg.validate();
  const std::size_t n = data.rows(), k = static_cast<std::size_t>(cfg.components);
  if (data.cols() == 0) throw Error("fit_gmm: zero-dimensional data");
  if (n < k) {
    throw Error("fit_gmm: " + std::to_string(n) + " rows for " + std::to_string(k) +
                " components");
  }
  for (double v : data.values()) {
    if (!std::isfinite(v)) throw Error("fit_gmm: non-finite value in data");
  }
  check_distinct_rows(data, k);

  const auto moments = global_moments(data);
  std::vector<double> floor(data.cols());
  for (std::size_t d = 0; d < floor.size(); ++d) {
    floor[d] = std::max(cfg.variance_floor * moments.var[d], 1e-12);
  }
  std::vector<double> global_var(moments.var);
  for (std::size_t d = 0; d < global_var.size(); ++d) global_var[d] = std::max(global_var[d], floor[d]);

  std::mt19937_64 rng(cfg.seed);
  Matrix resp = cfg.init == GmmInit::kmeans ? kmeans_init(data, cfg, rng) : random_init(data, cfg, rng);

  GmmFit fit;
  std::vector<double> row_loglik(n, 0.0);
  fit.model = m_step(data, resp, floor, global_var, row_loglik, fit.reseeded_components);

  std::vector<double> scratch(k);
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      row_loglik[i] = fit.model.posteriors(data.row(i), resp.row(i));
      total += row_loglik[i];
    }
    const double mean_ll = total / static_cast<double>(n);
    fit.iterations = iter + 1;
    if (!fit.log_likelihood.empty()) {
      const double prev = fit.log_likelihood.back();
      fit.log_likelihood.push_back(mean_ll);
      if (mean_ll - prev < cfg.rel_tol * std::abs(prev)) {
        fit.converged = true;
        break;
      }
    } else {
      fit.log_likelihood.push_back(mean_ll);
    }
    if (iter + 1 == cfg.max_iters) break;
    fit.model = m_step(data, resp, floor, global_var, row_loglik, fit.reseeded_components);
  }
  return fit;
}

std::vector<double> soft_count(const GmmModel& g, const Matrix& frames) {
  if (frames.empty()) throw Error("soft_count: empty frame matrix");
  std::vector<double> acc(g.components(), 0.0), post(g.components());
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    g.posteriors(frames.row(t), post);
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += post[c];
  }
  double total = 0.0;
  for (auto& v : acc) total += (v /= static_cast<double>(frames.rows()));
  for (auto& v : acc) v /= total;
  return acc;
}

void save_gmm(const std::filesystem::path& path, const GmmModel& g) {
  ByteWriter w;
  w.magic("WMGMM1");
  w.u32(static_cast<std::uint32_t>(g.components()));
  w.u32(static_cast<std::uint32_t>(g.dim()));
  w.f64s(g.weights());
  w.f64s(g.means().values());
  w.f64s(g.variances().values());
  w.write_to(path);
}

GmmModel load_gmm(const std::filesystem::path& path) {
  auto r = ByteReader::from_file(path);
  r.expect_magic("WMGMM1");
  const std::size_t k = r.u32();
  const std::size_t d = r.u32();
  auto weights = r.f64s(k);
  Matrix means(k, d, r.f64s(k * d));
  Matrix vars(k, d, r.f64s(k * d));
  if (!r.at_end()) throw Error(path.string() + ": trailing bytes after GMM");
  return GmmModel(std::move(weights), std::move(means), std::move(vars));
}

}  // namespace wmil
