// tools/wmil.cpp

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

// Command-line front end: features -> ubm -> encode -> train -> eval, plus
// sweep, bench and synth. Every subcommand reads and writes files only.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wmil/error.hpp"
#include "wmil/pipeline.hpp"

namespace fs = std::filesystem;
using namespace wmil;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitConfig = 2;

struct ExperimentFlags {
  std::string algorithm = "mifv";
  std::string ubm_init = "kmeans";
  bool no_ifv = false;
  bool fv_weights = false;
};

void add_train_options(CLI::App* sub, MilTrainConfig& t) {
  sub->add_option("-C,--C", t.C, "SVM regularisation trade-off")->capture_default_str();
  sub->add_option("--max-outer-iters", t.max_outer_iters, "miSVM/MISVM outer iteration cap")
      ->capture_default_str();
  sub->add_option("--solver-tol", t.solver_tol, "SVM projected-gradient tolerance")
      ->capture_default_str();
  sub->add_option("--solver-max-iters", t.solver_max_iters, "SVM passes cap")->capture_default_str();
  sub->add_option("--bias-scale", t.bias_scale, "constant bias feature value")->capture_default_str();
}

void add_experiment_options(CLI::App* sub, EvalRequest& req, ExperimentFlags& flags) {
  auto& e = req.experiment;
  sub->add_option("--manifest", req.manifest, "instance-level manifest (JSON lines)")->required();
  sub->add_option("--algorithm", flags.algorithm, "misvm, MISVM, mifv, misup or misup_mn")
      ->capture_default_str();
  sub->add_option("-K,--components", e.components, "UBM components")->capture_default_str();
  sub->add_option("-r,--relevance", e.relevance, "MAP relevance factor")->capture_default_str();
  sub->add_flag("--no-ifv", flags.no_ifv, "skip signed-sqrt + L2 on Fisher vectors");
  sub->add_flag("--fv-weights", flags.fv_weights, "append the mixture-weight block to Fisher vectors");
  sub->add_flag("--zscore", e.zscore_supervectors, "standardise supervectors on training bags");
  sub->add_option("--ubm-iters", e.ubm.max_iters, "UBM EM iteration cap")->capture_default_str();
  sub->add_option("--ubm-tol", e.ubm.rel_tol, "UBM relative tolerance")->capture_default_str();
  sub->add_option("--ubm-init", flags.ubm_init, "kmeans or random")->capture_default_str();
  sub->add_option("--n-folds", req.n_folds, "number of folds")->capture_default_str();
  sub->add_option("--folds", req.folds, "reuse a saved fold plan (JSON)");
  sub->add_option("--stratify", req.stratify_event, "stratify folds by this event");
  add_train_options(sub, e.train);
}

void resolve_experiment(EvalRequest& req, const ExperimentFlags& flags) {
  auto& e = req.experiment;
  e.algorithm = parse_algorithm(flags.algorithm);
  e.ifv = !flags.no_ifv;
  e.fv_layout = flags.fv_weights ? FvLayout::mean_var_weight : FvLayout::mean_var;
  if (flags.ubm_init == "kmeans") {
    e.ubm.init = GmmInit::kmeans;
  } else if (flags.ubm_init == "random") {
    e.ubm.init = GmmInit::random_responsibility;
  } else {
    throw ConfigError("--ubm-init must be kmeans or random");
  }
}

std::vector<Algorithm> parse_algorithms(const std::vector<std::string>& names) {
  std::vector<Algorithm> out;
  for (const auto& n : names) out.push_back(parse_algorithm(n));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wmil: audio event detection from weak labels via multiple instance learning"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML-like key = value file; flags override it");

  std::uint64_t seed = 0;
  fs::path out_dir = "out";
  int jobs = 1;
  app.add_option("--seed", seed, "top-level seed")->capture_default_str();
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--jobs", jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  // features
  FeatureConfig feat;
  auto* features = app.add_subcommand("features", "audio -> per-segment soft-count instances");
  features->add_option("--manifest", feat.manifest, "audio manifest (JSON lines)")->required();
  features->add_option("-M,--codebook-size", feat.codebook_size, "audio-word GMM components")
      ->capture_default_str();
  features->add_option("--window", feat.window_s, "segment length (s)")->capture_default_str();
  features->add_option("--hop", feat.hop_s, "segment hop (s)")->capture_default_str();
  features->add_option("--sample-rate", feat.sample_rate, "expected sample rate (Hz)")
      ->capture_default_str();
  features->add_option("--n-coeffs", feat.mfcc.n_coeffs, "cepstral coefficients incl. C0")
      ->capture_default_str();
  features->add_option("--frame-len", feat.mfcc.frame_len_s, "MFCC frame (s)")->capture_default_str();
  features->add_option("--frame-hop", feat.mfcc.frame_hop_s, "MFCC hop (s)")->capture_default_str();
  features->add_option("--mel-filters", feat.mfcc.n_mel_filters, "mel filters")->capture_default_str();
  features->add_option("--fft-size", feat.mfcc.fft_size, "0 = next power of two")
      ->capture_default_str();
  features->add_option("--pre-emphasis", feat.mfcc.pre_emphasis, "pre-emphasis coefficient")
      ->capture_default_str();
  features->add_option("--codebook-iters", feat.codebook.max_iters, "codebook EM cap")
      ->capture_default_str();
  features->add_option("--codebook-max-frames", feat.codebook_max_frames,
                       "frames used to fit the codebook")
      ->capture_default_str();

  // ubm
  fs::path ubm_manifest;
  GmmFitConfig ubm_cfg;
  BagSelection ubm_sel;
  std::string ubm_init = "kmeans";
  auto* ubm = app.add_subcommand("ubm", "fit the instance-space GMM");
  ubm->add_option("--manifest", ubm_manifest, "instance-level manifest")->required();
  ubm->add_option("-K,--components", ubm_cfg.components, "components")->capture_default_str();
  ubm->add_option("--max-iters", ubm_cfg.max_iters, "EM cap")->capture_default_str();
  ubm->add_option("--rel-tol", ubm_cfg.rel_tol, "relative tolerance")->capture_default_str();
  ubm->add_option("--init", ubm_init, "kmeans or random")->capture_default_str();
  ubm->add_option("--folds", ubm_sel.folds, "fold plan JSON");
  ubm->add_option("--exclude-fold", ubm_sel.exclude_fold, "leave this fold out")
      ->capture_default_str();

  // encode
  fs::path enc_manifest, enc_ubm;
  EncoderConfig enc_cfg;
  std::string enc_kind = "fv", enc_layout = "mean_var", enc_mode = "mean_var";
  bool enc_no_ifv = false;
  auto* encode = app.add_subcommand("encode", "encode bags as Fisher vectors or supervectors");
  encode->add_option("--manifest", enc_manifest, "instance-level manifest")->required();
  encode->add_option("--ubm", enc_ubm, "UBM model file")->required();
  encode->add_option("--kind", enc_kind, "fv or sup")->capture_default_str();
  encode->add_option("--layout", enc_layout, "fv: mean_var or mean_var_weight")->capture_default_str();
  encode->add_option("--mode", enc_mode, "sup: mean_var or mean_only")->capture_default_str();
  encode->add_option("-r,--relevance", enc_cfg.relevance, "MAP relevance factor")
      ->capture_default_str();
  encode->add_flag("--no-ifv", enc_no_ifv, "skip signed-sqrt + L2");

  // train
  TrainRequest train_req;
  std::string train_algo = "mifv";
  auto* train = app.add_subcommand("train", "train one event detector");
  train->add_option("--manifest", train_req.manifest, "instance-level manifest")->required();
  train->add_option("--event", train_req.event, "event name")->required();
  train->add_option("--algorithm", train_algo, "misvm, MISVM, mifv, misup or misup_mn")
      ->capture_default_str();
  train->add_option("--encoded", train_req.encoded, "encoded-bag table (encoder methods)");
  train->add_option("--folds", train_req.selection.folds, "fold plan JSON");
  train->add_option("--exclude-fold", train_req.selection.exclude_fold, "leave this fold out")
      ->capture_default_str();
  add_train_options(train, train_req.train);

  // eval
  EvalRequest eval_req;
  ExperimentFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "cross-fold pooled AP / MAP");
  add_experiment_options(eval, eval_req, eval_flags);

  // sweep
  EvalRequest sweep_req;
  ExperimentFlags sweep_flags;
  SweepGrid grid{{1, 4, 8, 16, 32, 64, 128}, {16.0}, {1.0}, {}};
  std::vector<std::string> sweep_algos{"mifv", "misup"};
  auto* sweep = app.add_subcommand("sweep", "grid over K, r and C");
  add_experiment_options(sweep, sweep_req, sweep_flags);
  sweep->add_option("--K-grid", grid.components, "UBM sizes")
      ->delimiter(',')
      ->capture_default_str();
  sweep->add_option("--r-grid", grid.relevance, "relevance factors")
      ->delimiter(',')
      ->capture_default_str();
  sweep->add_option("--C-grid", grid.C, "SVM C values")
      ->delimiter(',')
      ->capture_default_str();
  sweep->add_option("--algorithms", sweep_algos, "methods to sweep")
      ->delimiter(',')
      ->capture_default_str();

  // bench
  EvalRequest bench_req;
  ExperimentFlags bench_flags;
  std::vector<std::string> bench_algos{"misvm", "MISVM", "mifv", "misup", "misup_mn"};
  int timed_folds = 1;
  auto* bench = app.add_subcommand("bench", "mean training time per method");
  add_experiment_options(bench, bench_req, bench_flags);
  bench->add_option("--algorithms", bench_algos, "methods to time")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--timed-folds", timed_folds, "folds timed per event")->capture_default_str();

  // synth
  SynthRequest synth_req;
  auto& sc = synth_req.config;
  auto* synth = app.add_subcommand("synth", "generate a synthetic weakly labelled dataset");
  synth->add_option("--n-bags", sc.n_bags, "bags")->capture_default_str();
  synth->add_option("--bag-min", sc.min_bag_size, "minimum bag size")->capture_default_str();
  synth->add_option("--bag-max", sc.max_bag_size, "maximum bag size")->capture_default_str();
  synth->add_option("--witness-rate", sc.witness_rate, "concept fraction of a positive bag")
      ->capture_default_str();
  synth->add_option("--positive-fraction", sc.positive_fraction, "P(bag positive) per event")
      ->capture_default_str();
  synth->add_option("--noise-sigma", sc.noise_sigma, "additive isotropic noise")
      ->capture_default_str();
  synth->add_option("--dim", synth_req.dim, "instance dimension")->capture_default_str();
  synth->add_option("--events", synth_req.n_events, "number of events")->capture_default_str();
  synth->add_option("--separation", synth_req.separation, "concept offset in std devs")
      ->capture_default_str();
  synth->add_option("--background-components", synth_req.background_components,
                    "background mixture size")
      ->capture_default_str();
  synth->add_option("--spacing", synth_req.spacing, "background component spacing")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    fs::create_directories(out_dir);
    {
      // Frozen copy of the resolved configuration, loadable with --config.
      std::ofstream frozen(out_dir / "config.toml", std::ios::trunc);
      // Unset optional paths and other subcommands' options are left out.
      std::istringstream all(app.config_to_str(true, false));
      std::string line;
      while (std::getline(all, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos || line.compare(eq + 1, std::string::npos, "\"\"") == 0) continue;
        const auto dot = line.find('.');
        if (dot != std::string::npos && dot < eq) {
          const auto* sub = app.get_subcommand_no_throw(line.substr(0, dot));
          if (sub != nullptr && !sub->parsed()) continue;
        }
        frozen << line << '\n';
      }
    }

    if (features->parsed()) {
      feat.out_dir = out_dir;
      feat.seed = seed;
      feat.jobs = jobs;
      const auto r = cmd_features(feat);
      std::cout << "features: " << r.computed.size() << " computed, " << r.up_to_date.size()
                << " up to date, " << r.failed.size() << " failed\n";
      for (const auto& [id, msg] : r.failed) std::cerr << "error: " << id << ": " << msg << '\n';
      std::cout << "manifest: " << r.manifest_out.string() << '\n';
      return r.failed.empty() ? kExitOk : kExitPartial;
    }
    if (ubm->parsed()) {
      ubm_cfg.seed = seed;
      if (ubm_init == "random") {
        ubm_cfg.init = GmmInit::random_responsibility;
      } else if (ubm_init != "kmeans") {
        throw ConfigError("--init must be kmeans or random");
      }
      const auto path = out_dir / "ubm.gmm";
      const auto g = cmd_ubm(ubm_manifest, ubm_cfg, ubm_sel, path);
      std::cout << "ubm: K=" << g.components() << " D=" << g.dim() << " -> " << path.string() << '\n';
      return kExitOk;
    }
    if (encode->parsed()) {
      if (enc_kind == "fv") {
        enc_cfg.kind = EncoderKind::fv;
      } else if (enc_kind == "sup") {
        enc_cfg.kind = EncoderKind::sup;
      } else {
        throw ConfigError("--kind must be fv or sup");
      }
      if (enc_layout != "mean_var" && enc_layout != "mean_var_weight") {
        throw ConfigError("--layout must be mean_var or mean_var_weight");
      }
      if (enc_mode != "mean_var" && enc_mode != "mean_only") {
        throw ConfigError("--mode must be mean_var or mean_only");
      }
      enc_cfg.fv_layout = enc_layout == "mean_var" ? FvLayout::mean_var : FvLayout::mean_var_weight;
      enc_cfg.sup_mode = enc_mode == "mean_var" ? SupMode::mean_var : SupMode::mean_only;
      enc_cfg.ifv = !enc_no_ifv;
      const auto path = out_dir / "encoded.bin";
      const auto n = cmd_encode(enc_manifest, enc_ubm, enc_cfg, jobs, path);
      std::cout << "encode: " << n << " bags -> " << path.string() << '\n';
      return kExitOk;
    }
    if (train->parsed()) {
      train_req.algorithm = parse_algorithm(train_algo);
      train_req.train.seed = seed;
      train_req.out = out_dir / (train_req.event + "." + train_algo + ".svm");
      cmd_train(train_req);
      std::cout << "train: -> " << train_req.out.string() << '\n';
      return kExitOk;
    }
    auto finish_request = [&](EvalRequest& req, const ExperimentFlags& flags) {
      resolve_experiment(req, flags);
      req.experiment.seed = seed;
      req.experiment.jobs = jobs;
      req.out_dir = out_dir;
    };
    if (eval->parsed()) {
      finish_request(eval_req, eval_flags);
      const auto r = cmd_eval(eval_req);
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
      for (const auto& [event, ap] : r.per_event_ap) std::cout << event << "\tAP " << ap << '\n';
      std::cout << "MAP " << r.map << '\n';
      return r.skipped_events.empty() ? kExitOk : kExitPartial;
    }
    if (sweep->parsed()) {
      finish_request(sweep_req, sweep_flags);
      grid.algorithms = parse_algorithms(sweep_algos);
      const auto r = cmd_sweep(sweep_req, grid);
      for (const auto& w : r.reports.front().warnings) std::cerr << "warning: " << w << '\n';
      std::cout << r.summary_csv;
      return kExitOk;
    }
    if (bench->parsed()) {
      finish_request(bench_req, bench_flags);
      const auto r = cmd_bench(bench_req, parse_algorithms(bench_algos), timed_folds);
      for (const auto& [name, t] : r.algorithms) {
        std::cout << name << "\tmean " << t.mean_s << " s\tlog10 " << t.log10_mean_s << '\n';
      }
      return kExitOk;
    }
    if (synth->parsed()) {
      sc.seed = seed;
      synth_req.out_dir = out_dir;
      const auto ds = cmd_synth(synth_req);
      std::cout << "synth: " << ds.dataset.bags.size() << " bags, "
                << ds.dataset.instance_count() << " instances -> "
                << (out_dir / "manifest.jsonl").string() << '\n';
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPartial;
  }
  return kExitConfig;
}
