// tests/acceptance.cpp

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

// End-to-end acceptance checks. One PASS/FAIL line per criterion; the exit
// status is non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "svm_oracle.hpp"
#include "test_util.hpp"
#include "wmil/binary_io.hpp"
#include "wmil/dsp.hpp"
#include "wmil/encode.hpp"
#include "wmil/eval.hpp"
#include "wmil/gmm.hpp"
#include "wmil/mil.hpp"
#include "wmil/svm.hpp"
#include "wmil/synth.hpp"

using namespace wmil;

namespace {

struct Outcome {
  bool ok = true;
  std::string failures;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (cond || failures.find(what) != std::string::npos) return;
    ok = false;
    failures += (failures.empty() ? "" : "; ") + what;
  }
};

using Criterion = std::function<void(Outcome&)>;

GmmModel random_model(Rng& rng, std::size_t k, std::size_t d) {
  std::vector<double> w(k);
  for (auto& v : w) v = rng.uniform(0.2, 1.0);
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& v : w) v /= s;
  Matrix var(k, d);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < d; ++j) var(i, j) = rng.uniform(0.3, 2.0);
  return GmmModel(w, rng.normal_matrix(k, d, 0.0, 2.0), var);
}

void encoding_identities(Outcome& out) {
  Rng rng(101);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto k = static_cast<std::size_t>(rng.integer(1, 16));
    const auto d = static_cast<std::size_t>(rng.integer(1, 12));
    auto g = random_model(rng, k, d);
    auto frames = rng.normal_matrix(static_cast<std::size_t>(rng.integer(1, 40)), d, 0.0, 3.0);
    auto p = soft_count(g, frames);
    worst = std::max(worst, std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0));
  }
  out.require(worst <= 1e-9, "soft_count sum off by " + std::to_string(worst));
  out.detail << "soft_count max |sum-1| " << worst;

  GmmModel one({1.0}, rng.normal_matrix(1, 5), Matrix(1, 5, 1.3));
  auto fv = encode_fv(one, rng.normal_matrix(7, 5), FvLayout::mean_var_weight);
  out.require(fv.values.back() == 0.0, "alpha_w nonzero at K=1");
  auto at_mean = encode_fv(one, Matrix(1, 5, std::vector<double>(one.means().row(0).begin(),
                                                                 one.means().row(0).end())));
  for (std::size_t d = 0; d < 5; ++d)
    out.require(std::abs(at_mean.values[d]) < 1e-15, "alpha_mu nonzero for bag {mu}");

  auto g = random_model(rng, 4, 6);
  auto bag = rng.normal_matrix(12, 6);
  EncoderConfig prior;
  prior.kind = EncoderKind::sup;
  prior.sup_mode = SupMode::mean_only;
  prior.relevance = 1e9;
  auto sup = encode_sup(g, bag, prior);
  double rel = 0.0;
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t d = 0; d < 6; ++d) {
      const double mu = g.means()(k, d);
      rel = std::max(rel, std::abs(sup.values[k * 6 + d] - mu) / std::abs(mu));
    }
  out.require(rel < 1e-5, "r=1e9 relative error " + std::to_string(rel));

  GmmModel single({1.0}, rng.normal_matrix(1, 6), Matrix(1, 6, 1.0));
  prior.relevance = 0.0;
  auto raw = encode_sup(single, bag, prior);
  double err = 0.0;
  for (std::size_t d = 0; d < 6; ++d) {
    double m = 0.0;
    for (std::size_t i = 0; i < bag.rows(); ++i) m += bag(i, d);
    err = std::max(err, std::abs(raw.values[d] - m / static_cast<double>(bag.rows())));
  }
  out.require(err < 1e-12, "r=0 mean differs from sample mean");
  out.detail << ", r=1e9 rel err " << rel << ", r=0 err " << err;
}

void dimensionality(Outcome& out) {
  Rng rng(102);
  for (auto [k, d] : {std::pair<std::size_t, std::size_t>{4, 8}, {8, 64}, {16, 128}}) {
    auto g = random_model(rng, k, d);
    auto bag = rng.normal_matrix(5, d);
    const auto mv = encode_fv(g, bag, FvLayout::mean_var).values.size();
    const auto mvw = encode_fv(g, bag, FvLayout::mean_var_weight).values.size();
    EncoderConfig mn;
    mn.kind = EncoderKind::sup;
    mn.sup_mode = SupMode::mean_only;
    const auto sup = encode_sup(g, bag, mn).values.size();
    out.require(mv == 2 * k * d && mvw == (2 * d + 1) * k && sup == k * d,
                "wrong length at K=" + std::to_string(k) + " D=" + std::to_string(d));
    out.detail << "K=" << k << ",D=" << d << ": " << mv << "/" << mvw << "/" << sup << " ";
  }
}

void em_correctness(Outcome& out) {
  Rng rng(103);
  double worst_drop = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto d = static_cast<std::size_t>(rng.integer(1, 6));
    auto data = rng.normal_matrix(static_cast<std::size_t>(rng.integer(50, 400)), d);
    for (std::size_t i = 0; i < data.rows() / 2; ++i) data(i, 0) += rng.uniform(2.0, 8.0);
    GmmFitConfig cfg;
    cfg.components = rng.integer(1, 8);
    cfg.seed = static_cast<std::uint64_t>(t);
    cfg.init = t % 2 ? GmmInit::random_responsibility : GmmInit::kmeans;
    auto fit = fit_gmm(data, cfg);
    for (std::size_t i = 1; i < fit.log_likelihood.size(); ++i)
      worst_drop = std::max(worst_drop, fit.log_likelihood[i - 1] - fit.log_likelihood[i]);
  }
  out.require(worst_drop <= 1e-8, "log-likelihood dropped by " + std::to_string(worst_drop));

  auto data = rng.normal_matrix(300, 4, 1.5, 2.0);
  GmmFitConfig one;
  one.components = 1;
  auto fit = fit_gmm(data, one);
  double err = 0.0;
  for (std::size_t d = 0; d < 4; ++d) {
    double m = 0.0, v = 0.0;
    for (std::size_t i = 0; i < 300; ++i) m += data(i, d);
    m /= 300.0;
    for (std::size_t i = 0; i < 300; ++i) v += (data(i, d) - m) * (data(i, d) - m);
    v /= 300.0;
    err = std::max({err, std::abs(fit.model.means()(0, d) - m), std::abs(fit.model.variances()(0, d) - v)});
  }
  out.require(err <= 1e-10, "K=1 differs from closed form by " + std::to_string(err));

  Matrix two(1000, 1);
  for (std::size_t i = 0; i < 1000; ++i) two(i, 0) = rng.normal(i < 500 ? 0.0 : 10.0, 1.0);
  GmmFitConfig k2;
  k2.components = 2;
  auto f2 = fit_gmm(two, k2);
  const std::size_t lo = f2.model.means()(0, 0) < f2.model.means()(1, 0) ? 0 : 1;
  const double e_mu = std::max(std::abs(f2.model.means()(lo, 0)), std::abs(f2.model.means()(1 - lo, 0) - 10.0));
  const double e_w = std::max(std::abs(f2.model.weights()[0] - 0.5), std::abs(f2.model.weights()[1] - 0.5));
  out.require(e_mu < 0.2 && e_w < 0.05, "two-cluster recovery outside tolerance");
  out.detail << "max LL drop " << worst_drop << ", K=1 err " << err << ", two-cluster mean err " << e_mu
             << " weight err " << e_w;
}

void svm_oracle(Outcome& out) {
  Rng rng(104);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const auto n = static_cast<std::size_t>(rng.integer(2, 6));
    const double angle = rng.uniform(0.0, 6.283185307179586);
    const double nx = std::cos(angle), ny = std::sin(angle), off = rng.uniform(-1.0, 1.0);
    Matrix x(n, 2);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = i % 2 ? 1 : -1;
      const double along = rng.uniform(-3.0, 3.0);
      const double dist = y[i] * (rng.uniform(0.05, 1.0) + rng.uniform(0.0, 2.0));
      x(i, 0) = -ny * along + nx * (dist - off);
      x(i, 1) = nx * along + ny * (dist - off);
    }
    MilTrainConfig cfg;
    cfg.C = std::pow(10.0, rng.uniform(-1.0, 2.0));
    cfg.solver_tol = 1e-6;
    cfg.solver_max_iters = 100000;
    auto m = train_linear_svm(x, y, cfg);
    auto ref = test::enumerate_svm(x, y, cfg.C, cfg.bias_scale);
    worst = std::max(worst, std::abs(test::primal(m.w, m.b, x, y, cfg.C, cfg.bias_scale) - ref.objective));
  }
  out.require(worst <= 1e-3, "objective gap " + std::to_string(worst));
  out.detail << "max objective gap " << worst << " over 20 problems";
}

void mil_constraints(Outcome& out) {
  int runs = 0, iterations = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto cfg = make_synth_config(4, 1, seed % 2 ? 2.0 : 4.0);
    cfg.n_bags = 60;
    cfg.seed = seed;
    cfg.noise_sigma = seed > 2 ? 1.0 : 0.0;
    auto s = generate(cfg);
    std::vector<Matrix> bags;
    std::vector<int> labels;
    for (const auto& b : s.dataset.bags) {
      bags.push_back(b.instances);
      labels.push_back(b.label("event0") == Presence::positive ? 1 : -1);
    }
    MilTrainConfig mcfg;
    mcfg.seed = seed;
    mcfg.C = seed % 2 ? 1.0 : 10.0;

    auto [m1, s1] = train_misvm(bags, labels, mcfg, [&](const MilState& st, const LinearModel&) {
      ++iterations;
      for (std::size_t i = 0; i < bags.size(); ++i) {
        int pos = 0;
        for (int l : st.instance_labels[i]) pos += l == 1;
        out.require(labels[i] == 1 ? pos >= 1 : pos == 0, "miSVM bag constraint violated");
      }
    });
    out.require(s1.converged || s1.cycle_detected || s1.iteration <= 50, "miSVM ran past 50 iterations");
    out.require(s1.iteration <= 50, "miSVM iteration count " + std::to_string(s1.iteration));

    std::size_t n_pos = std::count(labels.begin(), labels.end(), 1);
    auto [m2, s2] = train_MISVM(bags, labels, mcfg, [&](const MilState& st, const LinearModel&) {
      ++iterations;
      out.require(st.witnesses.size() == n_pos, "MISVM witness count");
      for (const auto& [b, j] : st.witnesses)
        out.require(labels[b] == 1 && j < bags[b].rows(), "MISVM witness outside a positive bag");
    });
    out.require(s2.iteration <= 50, "MISVM iteration count " + std::to_string(s2.iteration));
    runs += 2;
  }
  out.detail << runs << " runs, " << iterations << " outer iterations checked";
}

SynthDataset detection_data(std::uint64_t seed) {
  auto cfg = make_synth_config(8, 1, 4.0);
  cfg.n_bags = 200;
  cfg.min_bag_size = 10;
  cfg.max_bag_size = 30;
  cfg.witness_rate = 0.2;
  cfg.seed = seed;
  return generate(cfg);
}

double pooled_ap(const Dataset& data, Algorithm a, std::uint64_t seed) {
  ExperimentConfig e;
  e.algorithm = a;
  e.components = 4;
  e.relevance = 16.0;
  e.ifv = true;
  e.seed = seed;
  auto folds = split_folds(data.bag_ids(), 4, derive_seed(seed, "folds"));
  return run_experiment(data, e, folds).map;
}

void end_to_end(Outcome& out) {
  auto s = detection_data(0);
  const double fv = pooled_ap(s.dataset, Algorithm::mifv, 0);
  const double sup = pooled_ap(s.dataset, Algorithm::misup, 0);
  const double mn = pooled_ap(s.dataset, Algorithm::misup_mn, 0);
  out.require(fv >= 0.95, "miFV AP below 0.95");
  out.require(sup >= 0.95, "miSUP AP below 0.95");
  out.require(std::abs(mn - sup) <= 0.05, "miSUP_MN more than 0.05 from miSUP");
  out.detail << "AP miFV " << fv << ", miSUP " << sup << ", miSUP_MN " << mn;
}

void relative_speed(Outcome& out) {
  auto cfg = make_synth_config(8, 1, 4.0);
  cfg.n_bags = 1100;
  cfg.seed = 0;
  auto s = generate(cfg);
  const auto n = s.dataset.instance_count();
  out.require(n >= 20000, "only " + std::to_string(n) + " instances");
  std::vector<ExperimentConfig> algos;
  for (auto a : {Algorithm::misvm, Algorithm::MISVM, Algorithm::mifv, Algorithm::misup}) {
    ExperimentConfig e;
    e.algorithm = a;
    algos.push_back(e);
  }
  auto folds = split_folds(s.dataset.bag_ids(), 4, derive_seed(0, "folds"));
  auto t = benchmark_training(algos, s.dataset, folds, 4);
  const double slow = std::min(t.algorithms.at("misvm").mean_s, t.algorithms.at("MISVM").mean_s);
  const double fast = std::max(t.algorithms.at("mifv").mean_s, t.algorithms.at("misup").mean_s);
  out.require(slow >= 5.0 * fast, "speed ratio only " + std::to_string(slow / fast));
  out.detail << n << " instances; seconds";
  for (const auto& [name, a] : t.algorithms) out.detail << " " << name << "=" << a.mean_s;
  out.detail << "; min slow/max fast ratio " << slow / fast;
}

void published_map(Outcome& out) {
  const std::vector<std::string> events{"Cheering", "Children Voices", "Clapping", "Crowd",
                                        "Drums",    "Engine Noise",    "Laughing", "Scraping"};
  const std::vector<std::pair<std::string, std::vector<double>>> cols{
      {"miSVM", {0.482, 0.130, 0.383, 0.470, 0.078, 0.330, 0.288, 0.449}},
      {"MISVM", {0.500, 0.142, 0.395, 0.583, 0.112, 0.389, 0.300, 0.305}},
      {"miFV", {0.629, 0.264, 0.492, 0.685, 0.233, 0.608, 0.506, 0.562}},
      {"miSUP", {0.605, 0.193, 0.494, 0.670, 0.263, 0.583, 0.431, 0.539}},
      {"miSUP_MN", {0.590, 0.193, 0.477, 0.663, 0.242, 0.540, 0.425, 0.511}}};
  const std::vector<double> printed{0.328, 0.339, 0.497, 0.472, 0.455};
  for (std::size_t c = 0; c < cols.size(); ++c) {
    std::map<std::string, double> aps;
    for (std::size_t e = 0; e < events.size(); ++e) aps[events[e]] = cols[c].second[e];
    const double map = mean_average_precision(aps);
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s %.5f vs %.3f", cols[c].first.c_str(), map, printed[c]);
    out.require(std::abs(map - printed[c]) <= 0.0005, buf);
    out.detail << (c ? ", " : "") << buf;
  }
}

void mfcc_frames(Outcome& out) {
  Rng rng(109);
  Waveform w{std::vector<double>(16000), 16000.0};
  for (auto& v : w.samples) v = rng.uniform(-0.5, 0.5);
  auto a = mfcc(w, MfccConfig{});
  out.require(a.rows() == 99, "got " + std::to_string(a.rows()) + " frames");
  test::TempDir dir;
  save_feature_matrix(dir.path() / "a.feat", a);
  save_feature_matrix(dir.path() / "b.feat", mfcc(w, MfccConfig{}));
  out.require(read_file_bytes(dir.path() / "a.feat") == read_file_bytes(dir.path() / "b.feat"),
              "feature files differ");
  out.detail << a.rows() << " frames x " << a.cols() << " coefficients, files identical";
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    double budget_s;
    Criterion run;
  };
  const std::vector<Entry> criteria{
      {1, "encoding identities", 10, encoding_identities},
      {2, "dimensionality contract", 1, dimensionality},
      {3, "EM correctness", 60, em_correctness},
      {4, "SVM solver oracle", 30, svm_oracle},
      {5, "MIL constraints", 60, mil_constraints},
      {6, "end-to-end detection", 120, end_to_end},
      {7, "relative training speed", 600, relative_speed},
      {8, "MAP of published columns", 1, published_map},
      {9, "MFCC frame count and determinism", 5, mfcc_frames},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(out);
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.require(secs < c.budget_s, "runtime over budget");
    std::printf("%s criterion %d (%s) [%.2fs / %.0fs]: %s\n", out.ok ? "PASS" : "FAIL", c.id, c.name,
                secs, c.budget_s, out.detail.str().c_str());
    if (!out.ok) std::printf("    failed: %s\n", out.failures.c_str());
    std::fflush(stdout);
    failed += !out.ok;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
