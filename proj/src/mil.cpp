// src/mil.cpp

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

#include "wmil/mil.hpp"

#include <limits>
#include <string>

#include "wmil/binary_io.hpp"
#include "wmil/error.hpp"

namespace wmil {

namespace {

void check_bags(std::span<const Matrix> bags, std::span<const int> labels, const char* who) {
  if (bags.size() != labels.size()) throw Error(std::string(who) + ": bag/label count mismatch");
  bool pos = false, neg = false;
  for (std::size_t i = 0; i < bags.size(); ++i) {
    if (bags[i].empty()) throw Error(std::string(who) + ": empty bag " + std::to_string(i));
    if (bags[i].cols() != bags[0].cols()) throw Error(std::string(who) + ": dimension mismatch");
    if (labels[i] == 1) {
      pos = true;
    } else if (labels[i] == -1) {
      neg = true;
    } else {
      throw Error(std::string(who) + ": bag labels must be +1 or -1");
    }
  }
  if (!pos) throw Error(std::string(who) + ": no positive bags");
  if (!neg) throw Error(std::string(who) + ": no negative bags");
}

template <typename T>
std::uint64_t hash_values(const std::vector<T>& flat) {
  return fnv1a64(std::span(reinterpret_cast<const std::uint8_t*>(flat.data()),
                           flat.size() * sizeof(T)));
}

std::size_t nearest_to_mean(const Matrix& bag) {
  std::vector<double> mean(bag.cols(), 0.0);
  for (std::size_t j = 0; j < bag.rows(); ++j) {
    for (std::size_t d = 0; d < bag.cols(); ++d) mean[d] += bag(j, d);
  }
  for (auto& v : mean) v /= static_cast<double>(bag.rows());
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < bag.rows(); ++j) {
    double dist = 0.0;
    for (std::size_t d = 0; d < bag.cols(); ++d) dist += (bag(j, d) - mean[d]) * (bag(j, d) - mean[d]);
    if (dist < best_dist) {
      best_dist = dist;
      best = j;
    }
  }
  return best;
}

// Tracks past assignments to tell fixed points from longer cycles.
template <typename Assignment>
class AssignmentHistory {
 public:
  // Returns the index of an earlier identical assignment, or -1.
  int find(const Assignment& a) const {
    for (std::size_t i = 0; i < past_.size(); ++i) {
      if (past_[i] == a) return static_cast<int>(i);
    }
    return -1;
  }
  void push(const Assignment& a) { past_.push_back(a); }

 private:
  std::vector<Assignment> past_;
};

}  // namespace

double bag_score(const LinearModel& m, const Matrix& bag) {
  return decision(m, bag.row(argmax_instance(m, bag)));
}

std::size_t argmax_instance(const LinearModel& m, const Matrix& bag) {
  if (bag.empty()) throw Error("argmax_instance: empty bag");
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < bag.rows(); ++j) {
    const double s = decision(m, bag.row(j));
    if (s > best_score) {
      best_score = s;
      best = j;
    }
  }
  return best;
}

std::pair<LinearModel, MilState> train_misvm(std::span<const Matrix> bags,
                                             std::span<const int> bag_labels,
                                             const MilTrainConfig& cfg,
                                             const MilObserver& observer) {
  cfg.validate();
  check_bags(bags, bag_labels, "train_misvm");
  MilState state;
  state.instance_labels.resize(bags.size());
  std::size_t total = 0;
  for (std::size_t i = 0; i < bags.size(); ++i) {
    state.instance_labels[i].assign(bags[i].rows(), bag_labels[i]);
    total += bags[i].rows();
  }
  // All instances are used every iteration; only labels change.
  Matrix x(total, bags[0].cols());
  {
    std::size_t r = 0;
    for (const auto& bag : bags) {
      for (std::size_t j = 0; j < bag.rows(); ++j, ++r) {
        std::copy(bag.row(j).begin(), bag.row(j).end(), x.row(r).begin());
      }
    }
  }
  auto flatten = [&](const std::vector<std::vector<int>>& labels) {
    std::vector<int> flat;
    flat.reserve(total);
    for (const auto& l : labels) flat.insert(flat.end(), l.begin(), l.end());
    return flat;
  };

  AssignmentHistory<std::vector<int>> history;
  LinearModel model;
  std::vector<double> scores;
  for (int iter = 1; iter <= cfg.max_outer_iters; ++iter) {
    const auto y = flatten(state.instance_labels);
    history.push(y);
    state.iteration = iter;
    state.training_examples = total;
    state.assignment_log.push_back(hash_values(y));
    MilTrainConfig solver_cfg = cfg;
    solver_cfg.seed = cfg.seed + static_cast<std::uint64_t>(iter);
    model = train_linear_svm(x, y, solver_cfg);
    if (observer) observer(state, model);

    auto next = state.instance_labels;
    for (std::size_t i = 0; i < bags.size(); ++i) {
      if (bag_labels[i] != 1) continue;
      bool any_positive = false;
      scores.resize(bags[i].rows());
      for (std::size_t j = 0; j < bags[i].rows(); ++j) {
        scores[j] = decision(model, bags[i].row(j));
        next[i][j] = scores[j] > 0.0 ? 1 : -1;
        any_positive = any_positive || next[i][j] == 1;
      }
      if (!any_positive) next[i][argmax_instance(model, bags[i])] = 1;
    }
    if (next == state.instance_labels) {
      state.converged = true;
      break;
    }
    if (history.find(flatten(next)) >= 0) {
      state.cycle_detected = true;
      break;
    }
    if (iter == cfg.max_outer_iters) break;
    state.instance_labels = std::move(next);
  }
  return {std::move(model), std::move(state)};
}

std::pair<LinearModel, MilState> train_MISVM(std::span<const Matrix> bags,
                                             std::span<const int> bag_labels,
                                             const MilTrainConfig& cfg,
                                             const MilObserver& observer) {
  cfg.validate();
  check_bags(bags, bag_labels, "train_MISVM");
  MilState state;
  std::size_t n_neg_instances = 0, n_pos_bags = 0;
  for (std::size_t i = 0; i < bags.size(); ++i) {
    if (bag_labels[i] == 1) {
      state.witnesses[i] = nearest_to_mean(bags[i]);
      ++n_pos_bags;
    } else {
      n_neg_instances += bags[i].rows();
    }
  }
  const std::size_t n_rows = n_pos_bags + n_neg_instances;
  Matrix x(n_rows, bags[0].cols());
  std::vector<int> y(n_rows, -1);
  // Negative instances fill the tail once; witness rows are rewritten per iteration.
  {
    std::size_t r = n_pos_bags;
    for (std::size_t i = 0; i < bags.size(); ++i) {
      if (bag_labels[i] == 1) continue;
      for (std::size_t j = 0; j < bags[i].rows(); ++j, ++r) {
        std::copy(bags[i].row(j).begin(), bags[i].row(j).end(), x.row(r).begin());
      }
    }
    std::fill(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n_pos_bags), 1);
  }
  auto as_vector = [](const std::map<std::size_t, std::size_t>& w) {
    std::vector<std::size_t> v;
    v.reserve(w.size());
    for (const auto& [bag, inst] : w) v.push_back(inst);
    return v;
  };

  AssignmentHistory<std::vector<std::size_t>> history;
  LinearModel model;
  for (int iter = 1; iter <= cfg.max_outer_iters; ++iter) {
    std::size_t r = 0;
    for (const auto& [bag, inst] : state.witnesses) {
      std::copy(bags[bag].row(inst).begin(), bags[bag].row(inst).end(), x.row(r++).begin());
    }
    const auto current = as_vector(state.witnesses);
    history.push(current);
    state.iteration = iter;
    state.training_examples = n_rows;
    state.assignment_log.push_back(hash_values(current));
    MilTrainConfig solver_cfg = cfg;
    solver_cfg.seed = cfg.seed + static_cast<std::uint64_t>(iter);
    model = train_linear_svm(x, y, solver_cfg);
    if (observer) observer(state, model);

    auto next = state.witnesses;
    for (auto& [bag, inst] : next) inst = argmax_instance(model, bags[bag]);
    if (next == state.witnesses) {
      state.converged = true;
      break;
    }
    if (history.find(as_vector(next)) >= 0) {
      state.cycle_detected = true;
      break;
    }
    if (iter == cfg.max_outer_iters) break;
    state.witnesses = std::move(next);
  }
  return {std::move(model), std::move(state)};
}

}  // namespace wmil
