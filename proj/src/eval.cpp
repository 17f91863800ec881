// src/eval.cpp

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

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "wmil/binary_io.hpp"
#include "wmil/error.hpp"
#include "wmil/eval.hpp"

namespace wmil {

using nlohmann::json;

RankedResult RankedResult::rank(std::vector<RankedEntry> entries) {
  for (const auto& e : entries) {
    if (e.label != 1 && e.label != -1) throw Error("ranked result: labels must be +1 or -1");
  }
  std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.bag_id < b.bag_id;
  });
  return {std::move(entries)};
}

double average_precision(const RankedResult& results) {
  double hits = 0.0, sum = 0.0;
  for (std::size_t r = 0; r < results.entries.size(); ++r) {
    if (results.entries[r].label == 1) {
      hits += 1.0;
      sum += hits / static_cast<double>(r + 1);
    }
  }
  if (hits == 0.0) throw Error("average_precision: no positive labels");
  return sum / hits;
}

double mean_average_precision(const std::map<std::string, double>& aps) {
  if (aps.empty()) throw Error("mean_average_precision: no events");
  double s = 0.0;
  for (const auto& [event, ap] : aps) s += ap;
  return s / static_cast<double>(aps.size());
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::misvm: return "misvm";
    case Algorithm::MISVM: return "MISVM";
    case Algorithm::mifv: return "mifv";
    case Algorithm::misup: return "misup";
    case Algorithm::misup_mn: return "misup_mn";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  for (auto a : {Algorithm::misvm, Algorithm::MISVM, Algorithm::mifv, Algorithm::misup,
                 Algorithm::misup_mn}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown algorithm \"" + name +
                    "\" (expected misvm, MISVM, mifv, misup, misup_mn)");
}

bool is_encoder_algorithm(Algorithm a) {
  return a == Algorithm::mifv || a == Algorithm::misup || a == Algorithm::misup_mn;
}

EncoderConfig ExperimentConfig::encoder() const {
  EncoderConfig e;
  e.kind = algorithm == Algorithm::mifv ? EncoderKind::fv : EncoderKind::sup;
  e.fv_layout = fv_layout;
  e.ifv = ifv;
  e.sup_mode = algorithm == Algorithm::misup_mn ? SupMode::mean_only : SupMode::mean_var;
  e.relevance = relevance;
  return e;
}

json ExperimentConfig::to_json() const {
  return {
      {"algorithm", to_string(algorithm)},
      {"components", components},
      {"relevance", relevance},
      {"ifv", ifv},
      {"fv_layout", fv_layout == FvLayout::mean_var ? "mean_var" : "mean_var_weight"},
      {"zscore_supervectors", zscore_supervectors},
      {"ubm", {{"max_iters", ubm.max_iters}, {"rel_tol", ubm.rel_tol},
               {"variance_floor", ubm.variance_floor},
               {"init", ubm.init == GmmInit::kmeans ? "kmeans" : "random"}}},
      {"train", {{"C", train.C}, {"max_outer_iters", train.max_outer_iters},
                 {"solver_tol", train.solver_tol}, {"solver_max_iters", train.solver_max_iters},
                 {"bias_scale", train.bias_scale}}},
      {"seed", seed},
  };
}

std::uint64_t derive_seed(std::uint64_t seed, const std::string& stage, int fold,
                          const std::string& event) {
  return fnv1a64(std::to_string(seed) + "/" + stage + "/" + std::to_string(fold) + "/" + event);
}

json report_to_json(const EvalReport& r, bool include_timing) {
  json scores = json::object();
  for (const auto& [event, recs] : r.scores) {
    json arr = json::array();
    for (const auto& s : recs) {
      arr.push_back({{"bag_id", s.bag_id}, {"score", s.score}, {"label", s.label},
                     {"fold", s.fold}});
    }
    scores[event] = arr;
  }
  json folds = json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"fold", f.fold}, {"train_bags", f.train_bags}, {"test_bags", f.test_bags},
                     {"mil_iterations", f.mil_iterations}});
  }
  json j = {
      {"algorithm", r.algorithm},
      {"config", r.config},
      {"per_event_ap", r.per_event_ap},
      {"map", r.map},
      {"skipped_events", r.skipped_events},
      {"warnings", r.warnings},
      {"folds", folds},
      {"scores", scores},
  };
  if (include_timing) j["timing"] = r.timing;
  return j;
}

std::string ap_table_csv(const std::map<std::string, EvalReport>& by_method) {
  std::set<std::string> events;
  for (const auto& [method, rep] : by_method) {
    for (const auto& [event, ap] : rep.per_event_ap) events.insert(event);
  }
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(3);
  out << "event";
  for (const auto& [method, rep] : by_method) out << ',' << method;
  out << '\n';
  for (const auto& event : events) {
    out << event;
    for (const auto& [method, rep] : by_method) {
      out << ',';
      if (auto it = rep.per_event_ap.find(event); it != rep.per_event_ap.end()) out << it->second;
    }
    out << '\n';
  }
  out << "MAP";
  for (const auto& [method, rep] : by_method) out << ',' << rep.map;
  out << '\n';
  return out.str();
}

json timing_to_json(const TimingReport& t) {
  json j = json::object();
  for (const auto& [name, a] : t.algorithms) {
    j[name] = {{"per_event_s", a.per_event_s},
               {"mean_s", a.mean_s},
               {"log10_mean_s", a.log10_mean_s},
               {"phase_mean_s", a.phase_mean_s}};
  }
  return j;
}

}  // namespace wmil
