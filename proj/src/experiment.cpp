// src/experiment.cpp

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

#include <chrono>
#include <cmath>

#include "wmil/error.hpp"
#include "wmil/eval.hpp"
#include "wmil/mil.hpp"
#include "wmil/parallel.hpp"

namespace wmil {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

Split split_for_fold(const Dataset& data, const FoldPlan& folds, int fold) {
  Split s;
  for (std::size_t i = 0; i < data.bags.size(); ++i) {
    (folds.fold_of(data.bags[i].id) == fold ? s.test : s.train).push_back(i);
  }
  return s;
}

void check_plan(const Dataset& data, const FoldPlan& folds) {
  if (folds.n_folds < 2) throw ConfigError("fold plan needs at least 2 folds");
  if (folds.assignment.size() != data.bags.size()) {
    throw ConfigError("fold plan covers " + std::to_string(folds.assignment.size()) +
                      " bags but the dataset has " + std::to_string(data.bags.size()));
  }
  for (const auto& b : data.bags) folds.fold_of(b.id);
}

// Bags of `idx` with a known label for `event`, and those labels as +1 / -1.
struct Labeled {
  std::vector<std::size_t> bags;
  std::vector<int> labels;
  bool has_both() const {
    bool pos = false, neg = false;
    for (int l : labels) (l == 1 ? pos : neg) = true;
    return pos && neg;
  }
};

Labeled labeled_bags(const Dataset& data, const std::vector<std::size_t>& idx,
                     const std::string& event) {
  Labeled out;
  for (auto i : idx) {
    const auto p = data.bags[i].label(event);
    if (p == Presence::unknown) continue;
    out.bags.push_back(i);
    out.labels.push_back(p == Presence::positive ? 1 : -1);
  }
  return out;
}

// Events with both classes present in every training split.
std::vector<std::string> evaluable_events(const Dataset& data, const FoldPlan& folds,
                                          std::vector<std::string>& skipped,
                                          std::vector<std::string>& warnings) {
  std::vector<std::string> out;
  for (const auto& event : data.events()) {
    bool ok = true;
    for (int f = 0; f < folds.n_folds && ok; ++f) {
      const auto split = split_for_fold(data, folds, f);
      if (!labeled_bags(data, split.train, event).has_both()) {
        warnings.push_back("event \"" + event + "\" skipped: training split for fold " +
                           std::to_string(f) + " lacks positive or negative bags");
        ok = false;
      }
    }
    if (ok) {
      out.push_back(event);
    } else {
      skipped.push_back(event);
    }
  }
  return out;
}

GmmModel fit_ubm(const Dataset& data, const std::vector<std::size_t>& train,
                 const ExperimentConfig& cfg, int fold) {
  std::vector<Matrix> parts;
  parts.reserve(train.size());
  for (auto i : train) parts.push_back(data.bags[i].instances);
  GmmFitConfig gcfg = cfg.ubm;
  gcfg.components = cfg.components;
  gcfg.seed = derive_seed(cfg.seed, "ubm", fold);
  return fit_gmm(vstack(parts), gcfg).model;
}

std::vector<std::vector<double>> encode_bags(const Dataset& data,
                                             const std::vector<std::size_t>& idx,
                                             const GmmModel& ubm, const ExperimentConfig& cfg) {
  const auto enc = cfg.encoder();
  std::vector<std::vector<double>> out(idx.size());
  parallel_for(idx.size(), cfg.jobs, [&](std::size_t k) {
    out[k] = encode_bag(ubm, data.bags[idx[k]].instances, enc).values;
  });
  return out;
}

// Per-dimension standardisation fitted on `fit_rows` and applied to all rows.
void zscore(std::vector<std::vector<double>>& rows, const std::vector<std::size_t>& fit_rows) {
  const std::size_t dim = rows.front().size();
  std::vector<double> mean(dim, 0.0), sd(dim, 0.0);
  for (auto r : fit_rows) {
    for (std::size_t d = 0; d < dim; ++d) mean[d] += rows[r][d];
  }
  for (auto& m : mean) m /= static_cast<double>(fit_rows.size());
  for (auto r : fit_rows) {
    for (std::size_t d = 0; d < dim; ++d) sd[d] += (rows[r][d] - mean[d]) * (rows[r][d] - mean[d]);
  }
  for (auto& s : sd) s = std::sqrt(s / static_cast<double>(fit_rows.size()));
  for (auto& row : rows) {
    for (std::size_t d = 0; d < dim; ++d) row[d] = (row[d] - mean[d]) / (sd[d] > 1e-12 ? sd[d] : 1.0);
  }
}

Matrix gather(const std::vector<std::vector<double>>& vectors, std::span<const std::size_t> rows) {
  Matrix m(rows.size(), vectors.front().size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    std::copy(vectors[rows[k]].begin(), vectors[rows[k]].end(), m.row(k).begin());
  }
  return m;
}

MilTrainConfig svm_config(const ExperimentConfig& cfg, int fold, const std::string& event) {
  MilTrainConfig t = cfg.train;
  t.seed = derive_seed(cfg.seed, "svm", fold, event);
  return t;
}

std::pair<LinearModel, MilState> train_instance_method(const Dataset& data, const Labeled& lab,
                                                       const ExperimentConfig& cfg, int fold,
                                                       const std::string& event) {
  std::vector<Matrix> bags;
  bags.reserve(lab.bags.size());
  for (auto i : lab.bags) bags.push_back(data.bags[i].instances);
  const auto tcfg = svm_config(cfg, fold, event);
  return cfg.algorithm == Algorithm::misvm ? train_misvm(bags, lab.labels, tcfg)
                                           : train_MISVM(bags, lab.labels, tcfg);
}

}  // namespace

EvalReport run_experiment(const Dataset& data, const ExperimentConfig& cfg,
                          const FoldPlan& folds) {
  check_plan(data, folds);
  cfg.train.validate();
  cfg.encoder().validate();
  EvalReport report;
  report.algorithm = to_string(cfg.algorithm);
  report.config = cfg.to_json();
  const auto events = evaluable_events(data, folds, report.skipped_events, report.warnings);
  if (events.empty()) throw Error("run_experiment: no event can be evaluated");

  std::map<std::string, std::vector<RankedEntry>> pooled;
  std::map<std::string, int> fold_of_bag;
  double t_ubm = 0.0, t_encode = 0.0, t_svm = 0.0;
  const auto t_start = Clock::now();

  for (int f = 0; f < folds.n_folds; ++f) {
    const auto split = split_for_fold(data, folds, f);
    FoldDetail detail;
    detail.fold = f;
    for (auto i : split.train) detail.train_bags.push_back(data.bags[i].id);
    for (auto i : split.test) detail.test_bags.push_back(data.bags[i].id);

    std::vector<std::vector<double>> encoded;  // indexed by dataset bag index
    if (is_encoder_algorithm(cfg.algorithm)) {
      auto t0 = Clock::now();
      const auto ubm = fit_ubm(data, split.train, cfg, f);
      t_ubm += seconds_since(t0);
      t0 = Clock::now();
      std::vector<std::size_t> all(data.bags.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      encoded = encode_bags(data, all, ubm, cfg);
      if (cfg.zscore_supervectors && cfg.encoder().kind == EncoderKind::sup) {
        zscore(encoded, split.train);
      }
      t_encode += seconds_since(t0);
    }

    for (const auto& event : events) {
      const auto train = labeled_bags(data, split.train, event);
      const auto test = labeled_bags(data, split.test, event);
      auto t0 = Clock::now();
      std::vector<double> scores(test.bags.size());
      if (is_encoder_algorithm(cfg.algorithm)) {
        const auto model = train_linear_svm(gather(encoded, train.bags), train.labels,
                                            svm_config(cfg, f, event));
        for (std::size_t k = 0; k < test.bags.size(); ++k) {
          scores[k] = decision(model, encoded[test.bags[k]]);
        }
      } else {
        const auto [model, state] = train_instance_method(data, train, cfg, f, event);
        detail.mil_iterations[event] = state.iteration;
        for (std::size_t k = 0; k < test.bags.size(); ++k) {
          scores[k] = bag_score(model, data.bags[test.bags[k]].instances);
        }
      }
      t_svm += seconds_since(t0);
      for (std::size_t k = 0; k < test.bags.size(); ++k) {
        const auto& id = data.bags[test.bags[k]].id;
        pooled[event].push_back({id, scores[k], test.labels[k]});
        fold_of_bag[id] = f;
      }
    }
    report.folds.push_back(std::move(detail));
  }

  for (const auto& event : events) {
    const auto ranked = RankedResult::rank(std::move(pooled[event]));
    report.per_event_ap[event] = average_precision(ranked);
    auto& recs = report.scores[event];
    for (const auto& e : ranked.entries) {
      recs.push_back({e.bag_id, e.score, e.label, fold_of_bag.at(e.bag_id)});
    }
  }
  report.map = mean_average_precision(report.per_event_ap);
  report.timing = {{"ubm", t_ubm}, {"encode", t_encode}, {"svm", t_svm},
                   {"total", seconds_since(t_start)}};
  return report;
}

TimingReport benchmark_training(std::span<const ExperimentConfig> algorithms, const Dataset& data,
                                const FoldPlan& folds, int timed_folds) {
  check_plan(data, folds);
  if (timed_folds < 1 || timed_folds > folds.n_folds) {
    throw ConfigError("benchmark: timed_folds must be in [1, n_folds]");
  }
  std::vector<std::string> skipped, warnings;
  const auto events = evaluable_events(data, folds, skipped, warnings);
  if (events.empty()) throw Error("benchmark: no event can be trained");

  TimingReport report;
  for (const auto& cfg : algorithms) {
    AlgorithmTiming timing;
    std::map<std::string, double> phases{{"ubm", 0.0}, {"encode", 0.0}, {"svm", 0.0}};
    for (const auto& event : events) {
      double total = 0.0;
      for (int f = 0; f < timed_folds; ++f) {
        const auto split = split_for_fold(data, folds, f);
        const auto train = labeled_bags(data, split.train, event);
        const auto t0 = Clock::now();
        if (is_encoder_algorithm(cfg.algorithm)) {
          const auto ubm = fit_ubm(data, split.train, cfg, f);
          const auto t1 = Clock::now();
          auto encoded = encode_bags(data, train.bags, ubm, cfg);
          std::vector<std::size_t> rows(train.bags.size());
          for (std::size_t k = 0; k < rows.size(); ++k) rows[k] = k;
          if (cfg.zscore_supervectors && cfg.encoder().kind == EncoderKind::sup) {
            zscore(encoded, rows);
          }
          const auto t2 = Clock::now();
          train_linear_svm(gather(encoded, rows), train.labels, svm_config(cfg, f, event));
          phases["ubm"] += std::chrono::duration<double>(t1 - t0).count();
          phases["encode"] += std::chrono::duration<double>(t2 - t1).count();
          phases["svm"] += seconds_since(t2);
        } else {
          train_instance_method(data, train, cfg, f, event);
          phases["svm"] += seconds_since(t0);
        }
        total += seconds_since(t0);
      }
      timing.per_event_s[event] = total / timed_folds;
    }
    double sum = 0.0;
    for (const auto& [e, s] : timing.per_event_s) sum += s;
    timing.mean_s = sum / static_cast<double>(events.size());
    timing.log10_mean_s = std::log10(timing.mean_s);
    const double runs = static_cast<double>(events.size()) * timed_folds;
    for (auto& [phase, s] : phases) timing.phase_mean_s[phase] = s / runs;
    report.algorithms[to_string(cfg.algorithm)] = std::move(timing);
  }
  return report;
}

}  // namespace wmil
