// tests/test_synth.cpp

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

#include <cmath>

#include "doctest.h"
#include "test_util.hpp"
#include "wmil/binary_io.hpp"
#include "wmil/error.hpp"
#include "wmil/synth.hpp"

using namespace wmil;

namespace {

SynthConfig small(std::uint64_t seed) {
  auto cfg = make_synth_config(8, 2, 4.0);
  cfg.n_bags = 50;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("standard layout") {
  auto cfg = make_synth_config(8, 1, 4.0);
  CHECK(cfg.dim() == 8);
  CHECK(cfg.background.components() == 4);
  CHECK(cfg.concepts.size() == 1);
  CHECK(cfg.events == std::vector<std::string>{"event0"});
  // Concept sits 4 standard deviations from background component 0.
  double dist2 = 0.0;
  for (std::size_t d = 0; d < 8; ++d) {
    double diff = cfg.concepts[0].means()(0, d) - cfg.background.means()(0, d);
    dist2 += diff * diff;
    CHECK(cfg.concepts[0].variances()(0, d) == 1.0);
  }
  CHECK(std::sqrt(dist2) == doctest::Approx(4.0));
  CHECK_THROWS_AS(make_synth_config(1, 1, 4.0), ConfigError);
  CHECK_THROWS_AS(make_synth_config(2, 1, 4.0, 5), ConfigError);
}

TEST_CASE("same seed gives identical data and files") {
  auto a = generate(small(3));
  auto b = generate(small(3));
  REQUIRE(a.dataset.bags.size() == b.dataset.bags.size());
  for (std::size_t i = 0; i < a.dataset.bags.size(); ++i) {
    CHECK(a.dataset.bags[i].id == b.dataset.bags[i].id);
    CHECK(a.dataset.bags[i].instances == b.dataset.bags[i].instances);
    CHECK(a.dataset.bags[i].labels == b.dataset.bags[i].labels);
  }
  CHECK(a.truth == b.truth);

  TempDir d1, d2;
  save_synth_dataset(a, d1.path());
  save_synth_dataset(b, d2.path());
  for (const char* f : {"manifest.jsonl", "truth.json", "features/bag00.feat", "features/bag49.feat"})
    CHECK(read_file_bytes(d1.path() / f) == read_file_bytes(d2.path() / f));

  auto c = generate(small(4));
  CHECK_FALSE(c.dataset.bags[0].instances == a.dataset.bags[0].instances);
}

TEST_CASE("saved dataset loads back") {
  auto s = generate(small(5));
  TempDir dir;
  save_synth_dataset(s, dir.path());
  auto loaded = load_dataset(dir.path() / "manifest.jsonl");
  REQUIRE(loaded.bags.size() == s.dataset.bags.size());
  for (std::size_t i = 0; i < loaded.bags.size(); ++i) {
    CHECK(loaded.bags[i].instances == s.dataset.bags[i].instances);
    CHECK(loaded.bags[i].labels == s.dataset.bags[i].labels);
  }
}

TEST_CASE("witness counts use the ceiling") {
  auto cfg = make_synth_config(4, 1, 4.0);
  cfg.n_bags = 100;
  cfg.min_bag_size = cfg.max_bag_size = 10;
  cfg.witness_rate = 0.2;
  auto s = generate(cfg);
  int positives = 0;
  for (std::size_t b = 0; b < 100; ++b) {
    int w = 0;
    for (int t : s.truth["event0"][b]) w += t;
    if (s.dataset.bags[b].label("event0") == Presence::positive) {
      ++positives;
      CHECK(w == 2);
    } else {
      CHECK(w == 0);
    }
  }
  CHECK(positives > 20);

  cfg.witness_rate = 0.01;
  s = generate(cfg);
  for (std::size_t b = 0; b < 100; ++b) {
    int w = 0;
    for (int t : s.truth["event0"][b]) w += t;
    if (s.dataset.bags[b].label("event0") == Presence::positive) CHECK(w == 1);
  }

  cfg.witness_rate = 1.0;
  s = generate(cfg);
  for (std::size_t b = 0; b < 100; ++b)
    if (s.dataset.bags[b].label("event0") == Presence::positive)
      for (int t : s.truth["event0"][b]) CHECK(t == 1);
}

TEST_CASE("bag labels follow the multiple-instance rule") {
  auto s = generate(small(6));
  for (const auto& [event, per_bag] : s.truth) {
    for (std::size_t b = 0; b < per_bag.size(); ++b) {
      const auto& bag = s.dataset.bags[b];
      CHECK(per_bag[b].size() == bag.instances.rows());
      CHECK(bag.instances.rows() >= 10);
      CHECK(bag.instances.rows() <= 30);
      int any = 0;
      for (int t : per_bag[b]) any |= t;
      CHECK(bag.label(event) == (any ? Presence::positive : Presence::negative));
    }
  }
}

TEST_CASE("well separated concepts are separable by nearest mean") {
  auto cfg = make_synth_config(8, 1, 6.0, 1);
  cfg.n_bags = 100;
  auto s = generate(cfg);
  std::vector<double> mc(8, 0.0), mb(8, 0.0);
  double nc = 0, nb = 0;
  for (std::size_t b = 0; b < s.dataset.bags.size(); ++b)
    for (std::size_t j = 0; j < s.dataset.bags[b].instances.rows(); ++j) {
      auto x = s.dataset.bags[b].instances.row(j);
      bool c = s.truth["event0"][b][j];
      for (std::size_t d = 0; d < 8; ++d) (c ? mc : mb)[d] += x[d];
      (c ? nc : nb) += 1;
    }
  for (std::size_t d = 0; d < 8; ++d) {
    mc[d] /= nc;
    mb[d] /= nb;
  }
  double correct = 0, total = 0;
  for (std::size_t b = 0; b < s.dataset.bags.size(); ++b)
    for (std::size_t j = 0; j < s.dataset.bags[b].instances.rows(); ++j) {
      auto x = s.dataset.bags[b].instances.row(j);
      double dc = 0, db = 0;
      for (std::size_t d = 0; d < 8; ++d) {
        dc += (x[d] - mc[d]) * (x[d] - mc[d]);
        db += (x[d] - mb[d]) * (x[d] - mb[d]);
      }
      correct += (dc < db) == static_cast<bool>(s.truth["event0"][b][j]);
      total += 1;
    }
  CHECK(correct / total > 0.99);
}

TEST_CASE("negative-bag instances follow the background mixture") {
  auto cfg = make_synth_config(4, 1, 4.0);
  cfg.n_bags = 1000;
  cfg.positive_fraction = 0.0;
  cfg.seed = 11;
  auto s = generate(cfg);
  REQUIRE(s.dataset.instance_count() >= 10000);
  const auto& g = cfg.background;
  for (std::size_t d = 0; d < 4; ++d) {
    double mean = 0.0, second = 0.0;
    for (std::size_t k = 0; k < g.components(); ++k) {
      double mu = g.means()(k, d), var = g.variances()(k, d);
      mean += g.weights()[k] * mu;
      second += g.weights()[k] * (var + mu * mu);
    }
    double sd = std::sqrt(second - mean * mean);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& bag : s.dataset.bags)
      for (std::size_t j = 0; j < bag.instances.rows(); ++j, ++n) sum += bag.instances(j, d);
    double se = sd / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(sum / static_cast<double>(n) - mean) < 3.0 * se);
  }
}

TEST_CASE("noise and config checks") {
  auto cfg = small(7);
  cfg.noise_sigma = 0.5;
  auto noisy = generate(cfg);
  CHECK_FALSE(noisy.dataset.bags[0].instances == generate(small(7)).dataset.bags[0].instances);

  auto bad = small(1);
  bad.witness_rate = 0.0;
  CHECK_THROWS_AS(generate(bad), ConfigError);
  bad = small(1);
  bad.min_bag_size = 5;
  bad.max_bag_size = 4;
  CHECK_THROWS_AS(generate(bad), ConfigError);
  bad = small(1);
  bad.concepts.pop_back();
  CHECK_THROWS_AS(generate(bad), ConfigError);
}

TEST_CASE("truth sidecar keys bags by id") {
  auto s = generate(small(8));
  auto j = truth_to_json(s);
  CHECK(j.contains("event0"));
  CHECK(j["event1"]["bag07"].size() == s.dataset.bags[7].instances.rows());
}
