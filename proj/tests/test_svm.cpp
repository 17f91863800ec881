// tests/test_svm.cpp

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
#include <fstream>

#include "doctest.h"
#include "svm_oracle.hpp"
#include "test_util.hpp"
#include "wmil/error.hpp"
#include "wmil/svm.hpp"

using namespace wmil;

namespace {

struct Problem {
  Matrix x;
  std::vector<int> y;
};

// Points on both sides of a random line, at least `gap` away from it.
Problem separable_2d(Rng& rng, std::size_t n, double gap) {
  const double angle = rng.uniform(0.0, 6.283185307179586);
  const double nx = std::cos(angle), ny = std::sin(angle), off = rng.uniform(-1.0, 1.0);
  Problem p{Matrix(n, 2), std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    int label = i % 2 ? 1 : -1;
    double along = rng.uniform(-3.0, 3.0);
    double dist = label * (gap + rng.uniform(0.0, 2.0));
    p.x(i, 0) = -ny * along + nx * (dist - off);
    p.x(i, 1) = nx * along + ny * (dist - off);
    p.y[i] = label;
  }
  return p;
}

MilTrainConfig tight(double c) {
  MilTrainConfig cfg;
  cfg.C = c;
  cfg.solver_tol = 1e-6;
  cfg.solver_max_iters = 100000;
  return cfg;
}

}  // namespace

TEST_CASE("separable pair") {
  Matrix x(2, 1, std::vector<double>{-1.0, 1.0});
  std::vector<int> y{-1, 1};
  SvmTrainInfo info;
  auto m = train_linear_svm(x, y, tight(100.0), &info);
  CHECK(info.converged);
  CHECK(m.w[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(std::abs(m.b) < 1e-4);
  CHECK(decision(m, std::vector<double>{1.0}) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(decision(m, std::vector<double>{-1.0}) == doctest::Approx(-1.0).epsilon(1e-4));
  CHECK(std::abs(decision(m, std::vector<double>{0.0})) < 1e-4);
  CHECK(m.C == 100.0);
}

TEST_CASE("flipping labels negates the model") {
  Rng rng(50);
  auto p = separable_2d(rng, 12, 0.2);
  auto a = train_linear_svm(p.x, p.y, tight(1.0));
  for (auto& v : p.y) v = -v;
  auto b = train_linear_svm(p.x, p.y, tight(1.0));
  CHECK(b.w[0] == doctest::Approx(-a.w[0]).epsilon(1e-4));
  CHECK(b.w[1] == doctest::Approx(-a.w[1]).epsilon(1e-4));
  CHECK(b.b == doctest::Approx(-a.b).epsilon(1e-4));
}

TEST_CASE("duplicated rows with half the cost give the same model") {
  Rng rng(51);
  Problem p{rng.normal_matrix(30, 3), {}};
  for (std::size_t i = 0; i < 30; ++i) p.y.push_back(p.x(i, 0) + 0.5 * rng.normal() > 0 ? 1 : -1);
  Matrix twice;
  std::vector<int> y2;
  for (int rep = 0; rep < 2; ++rep)
    for (std::size_t i = 0; i < 30; ++i) {
      twice.append_row(p.x.row(i));
      y2.push_back(p.y[i]);
    }
  auto a = train_linear_svm(p.x, p.y, tight(2.0));
  auto b = train_linear_svm(twice, y2, tight(1.0));
  for (std::size_t d = 0; d < 3; ++d) CHECK(std::abs(a.w[d] - b.w[d]) < 1e-3);
  CHECK(std::abs(a.b - b.b) < 1e-3);
}

TEST_CASE("decision examples") {
  LinearModel m{{0.0, 0.0, 0.0}, 0.5, 1.0};
  CHECK(decision(m, std::vector<double>{7.0, -2.0, 1.0}) == 0.5);
  LinearModel e1{{1.0, 0.0}, 0.0, 1.0};
  CHECK(decision(e1, std::vector<double>{3.0, 11.0}) == 3.0);
  CHECK_THROWS_AS(decision(e1, std::vector<double>{3.0}), Error);
}

TEST_CASE("solver matches exact enumeration on tiny problems") {
  Rng rng(52);
  for (int t = 0; t < 40; ++t) {
    auto p = separable_2d(rng, static_cast<std::size_t>(rng.integer(2, 6)), rng.uniform(0.05, 1.0));
    const double c = std::pow(10.0, rng.uniform(-1.0, 2.0));
    const double bias_scale = t % 2 ? 1.0 : 2.0;
    MilTrainConfig cfg = tight(c);
    cfg.bias_scale = bias_scale;
    auto m = train_linear_svm(p.x, p.y, cfg);
    auto ref = test::enumerate_svm(p.x, p.y, c, bias_scale);
    double got = svm_primal_objective(m, p.x, p.y, bias_scale);
    CHECK(got == doctest::Approx(test::primal(m.w, m.b, p.x, p.y, c, bias_scale)).epsilon(1e-12));
    CHECK(got >= ref.objective - 1e-9);
    CHECK(got - ref.objective < 1e-4);
  }
}

TEST_CASE("non-separable data still reaches the optimum") {
  Rng rng(53);
  for (int t = 0; t < 20; ++t) {
    std::size_t n = static_cast<std::size_t>(rng.integer(3, 6));
    Problem p{rng.normal_matrix(n, 2), std::vector<int>(n)};
    for (std::size_t i = 0; i < n; ++i) p.y[i] = i % 2 ? 1 : -1;
    auto m = train_linear_svm(p.x, p.y, tight(1.0));
    auto ref = test::enumerate_svm(p.x, p.y, 1.0, 1.0);
    CHECK(svm_primal_objective(m, p.x, p.y, 1.0) - ref.objective < 1e-5);
  }
}

TEST_CASE("solver is deterministic and validates input") {
  Rng rng(54);
  auto p = separable_2d(rng, 50, 0.1);
  MilTrainConfig cfg;
  cfg.seed = 9;
  CHECK(train_linear_svm(p.x, p.y, cfg) == train_linear_svm(p.x, p.y, cfg));

  std::vector<int> one_class(50, 1);
  CHECK_THROWS_AS(train_linear_svm(p.x, one_class, cfg), Error);
  auto bad = p.y;
  bad[0] = 0;
  CHECK_THROWS_AS(train_linear_svm(p.x, bad, cfg), Error);
  auto nan_x = p.x;
  nan_x(3, 1) = NAN;
  CHECK_THROWS_AS(train_linear_svm(nan_x, p.y, cfg), Error);
  CHECK_THROWS_AS(train_linear_svm(p.x, std::vector<int>(3, 1), cfg), Error);
  MilTrainConfig zero_c;
  zero_c.C = 0.0;
  CHECK_THROWS_AS(train_linear_svm(p.x, p.y, zero_c), ConfigError);
  MilTrainConfig no_outer;
  no_outer.max_outer_iters = 0;
  CHECK_THROWS_AS(no_outer.validate(), ConfigError);
}

TEST_CASE("model file round trip") {
  TempDir dir;
  LinearModel m{{0.25, -1.5, 3.0}, -0.75, 4.0};
  save_linear_model(dir.path() / "m.svm", m, {{"C", 4.0}, {"iterations", 12}, {"converged", true}});
  CHECK(load_linear_model(dir.path() / "m.svm").w == m.w);
  CHECK(load_linear_model(dir.path() / "m.svm").b == m.b);
  std::ifstream side(dir.path() / "m.svm.json");
  auto j = nlohmann::json::parse(side);
  CHECK(j["C"] == 4.0);
  CHECK(j["iterations"] == 12);
  CHECK(j["converged"] == true);
}
