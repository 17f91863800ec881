// include/wmil/svm.hpp

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

#include "json.hpp"
#include "wmil/matrix.hpp"

namespace wmil {

struct LinearModel {
  std::vector<double> w;
  double b = 0.0;
  double C = 1.0;

  bool operator==(const LinearModel&) const = default;
};

// Shared by the plain solver and the MIL outer loops.
struct MilTrainConfig {
  double C = 1.0;
  int max_outer_iters = 50;
  double solver_tol = 1e-3;    // max projected-gradient spread at exit
  int solver_max_iters = 1000; // passes over the active set
  // The bias is learned as the weight of a constant feature with this value,
  // so the regulariser is 0.5 * (|w|^2 + (b / bias_scale)^2).
  double bias_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SvmTrainInfo {
  int iterations = 0;
  bool converged = false;
  double kkt_violation = 0.0;  // projected-gradient spread at the last pass
};

// L2-regularised L1-hinge linear SVM trained by dual coordinate descent with
// shrinking. Labels are +1 / -1.
LinearModel train_linear_svm(const Matrix& x, std::span<const int> y, const MilTrainConfig& cfg,
                             SvmTrainInfo* info = nullptr);

// w . x + b
double decision(const LinearModel& m, std::span<const double> x);

// Primal objective the solver minimises (bias regularised through bias_scale).
double svm_primal_objective(const LinearModel& m, const Matrix& x, std::span<const int> y,
                            double bias_scale);

// "WMSVM1", u32 dim, f64 bias, f64 weights; plus a JSON sidecar at
// `path` + ".json" holding {C, iterations, converged}.
void save_linear_model(const std::filesystem::path& path, const LinearModel& m,
                       const nlohmann::json& sidecar);
LinearModel load_linear_model(const std::filesystem::path& path);

}  // namespace wmil
