// tests/test_eval.cpp

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
#include <numeric>
#include <set>

#include "doctest.h"
#include "test_util.hpp"
#include "wmil/error.hpp"
#include "wmil/eval.hpp"
#include "wmil/synth.hpp"

using namespace wmil;

namespace {

RankedResult ranking(const std::vector<int>& labels_in_rank_order) {
  std::vector<RankedEntry> e;
  for (std::size_t i = 0; i < labels_in_rank_order.size(); ++i)
    e.push_back({"id" + std::to_string(i), 100.0 - static_cast<double>(i), labels_in_rank_order[i]});
  return RankedResult::rank(e);
}

// Precision at each relevant position, computed from explicit prefix counts.
double ap_oracle(const std::vector<int>& labels) {
  double total = 0.0;
  int positives = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] != 1) continue;
    int hits = 0;
    for (std::size_t i = 0; i <= k; ++i) hits += labels[i] == 1;
    total += static_cast<double>(hits) / static_cast<double>(k + 1);
    ++positives;
  }
  return total / positives;
}

Dataset easy_dataset(std::uint64_t seed, int n_bags = 40) {
  auto cfg = make_synth_config(4, 1, 8.0);
  cfg.n_bags = n_bags;
  cfg.min_bag_size = 6;
  cfg.max_bag_size = 10;
  cfg.witness_rate = 0.3;
  cfg.seed = seed;
  return generate(cfg).dataset;
}

}  // namespace

TEST_CASE("average precision examples") {
  CHECK(average_precision(ranking({1, 1, -1, -1})) == 1.0);
  CHECK(average_precision(ranking({1, -1, 1, -1})) == doctest::Approx(0.5 * (1.0 + 2.0 / 3.0)).epsilon(1e-15));
  CHECK(average_precision(ranking({1, -1, 1, -1})) == doctest::Approx(0.8333).epsilon(1e-4));
  CHECK(average_precision(ranking({-1, -1, 1, 1})) == doctest::Approx(0.5 * (1.0 / 3.0 + 0.5)).epsilon(1e-15));
  CHECK(average_precision(ranking({-1, -1, 1, 1})) == doctest::Approx(0.41667).epsilon(1e-4));
  CHECK_THROWS_AS(average_precision(ranking({-1, -1})), Error);
}

TEST_CASE("average precision agrees with the prefix-count oracle") {
  Rng rng(70);
  for (int t = 0; t < 300; ++t) {
    std::vector<int> labels(static_cast<std::size_t>(rng.integer(1, 40)));
    for (auto& l : labels) l = rng.uniform(0.0, 1.0) < 0.3 ? 1 : -1;
    labels[static_cast<std::size_t>(rng.integer(0, static_cast<int>(labels.size()) - 1))] = 1;
    CHECK(average_precision(ranking(labels)) == doctest::Approx(ap_oracle(labels)).epsilon(1e-14));
  }
}

TEST_CASE("reversed perfect ranking has the analytic worst-case value") {
  for (int n = 2; n <= 30; ++n) {
    for (int p = 1; p < n; ++p) {
      std::vector<int> labels(static_cast<std::size_t>(n), -1);
      for (int i = n - p; i < n; ++i) labels[static_cast<std::size_t>(i)] = 1;
      double worst = 0.0;
      for (int i = 1; i <= p; ++i) worst += static_cast<double>(i) / (n - p + i);
      worst /= p;
      CHECK(average_precision(ranking(labels)) == doctest::Approx(worst).epsilon(1e-14));
    }
  }
}

TEST_CASE("AP ignores strictly monotone score transforms") {
  Rng rng(71);
  for (int t = 0; t < 50; ++t) {
    std::vector<RankedEntry> a, b;
    for (int i = 0; i < 25; ++i) {
      double s = rng.normal();
      int l = rng.uniform(0, 1) < 0.4 || i == 0 ? 1 : -1;
      std::string id = "x" + std::to_string(i);
      a.push_back({id, s, l});
      b.push_back({id, std::exp(3.0 * s) + 7.0, l});
    }
    CHECK(average_precision(RankedResult::rank(a)) == average_precision(RankedResult::rank(b)));
  }
}

TEST_CASE("ties are broken by bag id") {
  auto r = RankedResult::rank({{"c", 1.0, 1}, {"a", 1.0, -1}, {"b", 2.0, -1}, {"d", 1.0, 1}});
  std::vector<std::string> order;
  for (const auto& e : r.entries) order.push_back(e.bag_id);
  CHECK(order == std::vector<std::string>{"b", "a", "c", "d"});
  CHECK(average_precision(r) == doctest::Approx(0.5 * (1.0 / 3.0 + 2.0 / 4.0)));
  CHECK_THROWS_AS(RankedResult::rank({{"a", 1.0, 0}}), Error);
}

TEST_CASE("mean average precision") {
  CHECK(mean_average_precision({{"a", 1.0}, {"b", 0.0}}) == 0.5);
  CHECK(mean_average_precision({{"a", 0.7}}) == 0.7);
  CHECK_THROWS_AS(mean_average_precision({}), Error);
}

TEST_CASE("published per-event columns") {
  const std::vector<std::string> events{"Cheering", "Children Voices", "Clapping", "Crowd",
                                        "Drums",    "Engine Noise",    "Laughing", "Scraping"};
  const std::vector<std::vector<double>> cols{
      {0.482, 0.130, 0.383, 0.470, 0.078, 0.330, 0.288, 0.449},
      {0.500, 0.142, 0.395, 0.583, 0.112, 0.389, 0.300, 0.305},
      {0.629, 0.264, 0.492, 0.685, 0.233, 0.608, 0.506, 0.562},
      {0.605, 0.193, 0.494, 0.670, 0.263, 0.583, 0.431, 0.539},
      {0.590, 0.193, 0.477, 0.663, 0.242, 0.540, 0.425, 0.511}};
  const std::vector<double> sums{2.610, 2.726, 3.979, 3.778, 3.641};
  for (std::size_t c = 0; c < cols.size(); ++c) {
    std::map<std::string, double> aps;
    for (std::size_t e = 0; e < events.size(); ++e) aps[events[e]] = cols[c][e];
    CHECK(mean_average_precision(aps) == doctest::Approx(sums[c] / 8.0).epsilon(1e-12));
  }
}

TEST_CASE("algorithm names and seeds") {
  for (auto a : {Algorithm::misvm, Algorithm::MISVM, Algorithm::mifv, Algorithm::misup,
                 Algorithm::misup_mn})
    CHECK(parse_algorithm(to_string(a)) == a);
  CHECK(to_string(Algorithm::misup_mn) == "misup_mn");
  CHECK_THROWS_AS(parse_algorithm("svm"), ConfigError);
  CHECK(is_encoder_algorithm(Algorithm::mifv));
  CHECK_FALSE(is_encoder_algorithm(Algorithm::MISVM));
  CHECK(derive_seed(1, "ubm", 0, "e") == derive_seed(1, "ubm", 0, "e"));
  std::set<std::uint64_t> seen;
  for (int f = 0; f < 4; ++f)
    for (const char* stage : {"ubm", "svm"}) seen.insert(derive_seed(5, stage, f, "e"));
  CHECK(seen.size() == 8);
}

TEST_CASE("pooled evaluation never scores a bag with a model that saw it") {
  auto data = easy_dataset(3, 24);
  auto plan = split_folds(data.bag_ids(), 4, 1);
  for (auto alg : {Algorithm::mifv, Algorithm::misvm}) {
    ExperimentConfig cfg;
    cfg.algorithm = alg;
    auto report = run_experiment(data, cfg, plan);
    REQUIRE(report.folds.size() == 4);
    for (const auto& [event, scores] : report.scores) {
      CHECK(scores.size() == data.bags.size());
      std::set<std::string> ids;
      for (const auto& s : scores) {
        ids.insert(s.bag_id);
        CHECK(s.fold == plan.fold_of(s.bag_id));
        const auto& fd = report.folds[static_cast<std::size_t>(s.fold)];
        CHECK(std::find(fd.train_bags.begin(), fd.train_bags.end(), s.bag_id) == fd.train_bags.end());
        CHECK(std::find(fd.test_bags.begin(), fd.test_bags.end(), s.bag_id) != fd.test_bags.end());
      }
      CHECK(ids.size() == data.bags.size());
    }
    double mean = 0.0;
    for (const auto& [e, ap] : report.per_event_ap) {
      CHECK(ap >= 0.0);
      CHECK(ap <= 1.0);
      mean += ap / static_cast<double>(report.per_event_ap.size());
    }
    CHECK(report.map == doctest::Approx(mean).epsilon(1e-15));
  }
}

TEST_CASE("evaluation is reproducible") {
  auto data = easy_dataset(4, 32);
  auto plan = split_folds(data.bag_ids(), 4, 2);
  for (auto alg : {Algorithm::mifv, Algorithm::misup, Algorithm::MISVM}) {
    ExperimentConfig cfg;
    cfg.algorithm = alg;
    cfg.seed = 77;
    auto a = report_to_json(run_experiment(data, cfg, plan), false).dump();
    auto b = report_to_json(run_experiment(data, cfg, plan), false).dump();
    CHECK(a == b);
    cfg.jobs = 3;
    CHECK(report_to_json(run_experiment(data, cfg, plan), false).dump() == a);
  }
}

TEST_CASE("easily separable data gives perfect AP") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto synth = make_synth_config(4, 1, 12.0);
    synth.n_bags = 60;
    synth.min_bag_size = 30;
    synth.max_bag_size = 40;
    synth.witness_rate = 0.5;
    synth.seed = seed;
    auto data = generate(synth).dataset;
    auto plan = split_folds(data.bag_ids(), 4, seed);
    ExperimentConfig cfg;
    cfg.algorithm = Algorithm::mifv;
    cfg.components = 4;
    auto report = run_experiment(data, cfg, plan);
    CHECK(report.per_event_ap.at("event0") == 1.0);
  }
}

TEST_CASE("events without training positives are skipped") {
  auto data = easy_dataset(6, 16);
  int kept = 0;
  for (auto& bag : data.bags) {
    bool pos = bag.label("event0") == Presence::positive;
    bag.labels["rare"] = pos && kept++ == 0 ? Presence::positive : Presence::negative;
    bag.labels["partial"] = bag.id < "bag04" ? Presence::unknown : bag.labels["event0"];
  }
  auto plan = split_folds(data.bag_ids(), 4, 0);
  ExperimentConfig cfg;
  auto report = run_experiment(data, cfg, plan);
  CHECK(std::find(report.skipped_events.begin(), report.skipped_events.end(), "rare") !=
        report.skipped_events.end());
  CHECK_FALSE(report.warnings.empty());
  CHECK(report.per_event_ap.count("rare") == 0);
  CHECK(report.per_event_ap.count("event0") == 1);
  if (report.scores.count("partial")) CHECK(report.scores.at("partial").size() == 12);
}

TEST_CASE("report serialisation and csv table") {
  auto data = easy_dataset(7, 16);
  auto plan = split_folds(data.bag_ids(), 4, 0);
  std::map<std::string, EvalReport> by;
  for (auto alg : {Algorithm::mifv, Algorithm::misup_mn}) {
    ExperimentConfig cfg;
    cfg.algorithm = alg;
    by[to_string(alg)] = run_experiment(data, cfg, plan);
  }
  auto j = report_to_json(by["mifv"]);
  CHECK(j.contains("per_event_ap"));
  CHECK(j.contains("map"));
  CHECK(j.contains("timing"));
  CHECK_FALSE(report_to_json(by["mifv"], false).contains("timing"));
  auto csv = ap_table_csv(by);
  CHECK(csv.rfind("event,mifv,misup_mn\n", 0) == 0);
  CHECK(csv.find("\nMAP,") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("benchmark durations are positive") {
  auto data = easy_dataset(8, 24);
  auto plan = split_folds(data.bag_ids(), 4, 0);
  std::vector<ExperimentConfig> algs(2);
  algs[0].algorithm = Algorithm::mifv;
  algs[1].algorithm = Algorithm::misvm;
  auto t = benchmark_training(algs, data, plan);
  REQUIRE(t.algorithms.size() == 2);
  for (const auto& [name, at] : t.algorithms) {
    CHECK(at.mean_s > 0.0);
    CHECK(at.log10_mean_s == doctest::Approx(std::log10(at.mean_s)));
    for (const auto& [e, s] : at.per_event_s) CHECK(s > 0.0);
  }
  CHECK(timing_to_json(t).contains("mifv"));
}
