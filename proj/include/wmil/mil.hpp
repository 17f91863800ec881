// include/wmil/mil.hpp

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
#include <functional>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "wmil/matrix.hpp"
#include "wmil/svm.hpp"

namespace wmil {

struct MilState {
  // miSVM: +1 / -1 per instance, indexed [bag][instance]. Empty for MISVM.
  std::vector<std::vector<int>> instance_labels;
  // MISVM: positive bag index -> witness instance index. Empty for miSVM.
  std::map<std::size_t, std::size_t> witnesses;
  int iteration = 0;
  bool converged = false;       // assignment reached a fixed point
  bool cycle_detected = false;  // assignment repeated an earlier, non-adjacent one
  std::size_t training_examples = 0;  // rows given to the SVM at this iteration
  std::vector<std::uint64_t> assignment_log;  // hash of the assignment per iteration
};

// Called after the SVM of each outer iteration with the state it was trained
// on and the resulting model.
using MilObserver = std::function<void(const MilState&, const LinearModel&)>;

// miSVM: instance labels in positive bags are latent. Start with all +1,
// alternate SVM training and relabelling by the sign of the decision value,
// forcing the arg-max instance positive when a positive bag would otherwise
// have none.
std::pair<LinearModel, MilState> train_misvm(std::span<const Matrix> bags,
                                             std::span<const int> bag_labels,
                                             const MilTrainConfig& cfg,
                                             const MilObserver& observer = {});

// MISVM: each positive bag is represented by one witness instance. Start with
// the instance nearest the bag mean, alternate SVM training on witnesses plus
// all negative instances and re-selecting the arg-max witness.
std::pair<LinearModel, MilState> train_MISVM(std::span<const Matrix> bags,
                                             std::span<const int> bag_labels,
                                             const MilTrainConfig& cfg,
                                             const MilObserver& observer = {});

// Max instance decision value; the bag-level score for instance models.
double bag_score(const LinearModel& m, const Matrix& bag);

// Lowest index among the maximal decision values.
std::size_t argmax_instance(const LinearModel& m, const Matrix& bag);

}  // namespace wmil
