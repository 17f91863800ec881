// include/wmil/gmm.hpp

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
#include <vector>

#include "wmil/matrix.hpp"

namespace wmil {

// Diagonal-covariance Gaussian mixture. Immutable once constructed; the
// per-component normalisers are cached so scoring is cheap.
class GmmModel {
 public:
  GmmModel() = default;
  // Weights must sum to 1 within 1e-9 (they are then renormalised exactly);
  // variances must be strictly positive.
  GmmModel(std::vector<double> weights, Matrix means, Matrix variances);

  std::size_t components() const { return weights_.size(); }
  std::size_t dim() const { return means_.cols(); }
  const std::vector<double>& weights() const { return weights_; }
  const Matrix& means() const { return means_; }
  const Matrix& variances() const { return variances_; }

  // out[k] = log w_k + log N(x; mu_k, sigma2_k).
  void log_joint(std::span<const double> x, std::span<double> out) const;

  // Writes the component posteriors for x into `out` and returns log p(x).
  double posteriors(std::span<const double> x, std::span<double> out) const;
  std::vector<double> posteriors(std::span<const double> x) const;

  double log_likelihood(std::span<const double> x) const;

  bool operator==(const GmmModel& o) const {
    return weights_ == o.weights_ && means_ == o.means_ && variances_ == o.variances_;
  }

 private:
  std::vector<double> weights_;
  Matrix means_;
  Matrix variances_;
  Matrix inv_var_;
  std::vector<double> log_const_;  // log w_k - 0.5 * sum_d log(2 pi sigma2_kd)
};

enum class GmmInit { kmeans, random_responsibility };

struct GmmFitConfig {
  int components = 4;
  int max_iters = 100;
  double rel_tol = 1e-6;
  // Per-dimension variance floor, as a fraction of the global data variance.
  double variance_floor = 1e-4;
  std::uint64_t seed = 0;
  GmmInit init = GmmInit::kmeans;
  int kmeans_iters = 5;

  void validate() const;
};

struct GmmFit {
  GmmModel model;
  std::vector<double> log_likelihood;  // mean per-row log-likelihood, one per E-step
  int iterations = 0;
  bool converged = false;
  int reseeded_components = 0;
};

// EM until the relative improvement of the mean log-likelihood drops below
// rel_tol or max_iters E-steps have run.
GmmFit fit_gmm(const Matrix& data, const GmmFitConfig& cfg);

// Mean posterior vector over the rows of `frames` (soft-count histogram).
std::vector<double> soft_count(const GmmModel& g, const Matrix& frames);

// Model file: "WMGMM1", u32 K, u32 D, weights, means, variances (f64 LE).
void save_gmm(const std::filesystem::path& path, const GmmModel& g);
GmmModel load_gmm(const std::filesystem::path& path);

}  // namespace wmil
