// include/wmil/pipeline.hpp

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
#include <optional>
#include <string>
#include <vector>

#include "wmil/dsp.hpp"
#include "wmil/encode.hpp"
#include "wmil/eval.hpp"
#include "wmil/gmm.hpp"
#include "wmil/synth.hpp"

namespace wmil {

// Audio -> instance matrices. Each bag is cut into overlapping segments; each
// segment becomes the soft-count histogram of its MFCC frames under an
// M-component audio-word codebook.
struct FeatureConfig {
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  int codebook_size = 64;
  MfccConfig mfcc;
  double window_s = 1.0;
  double hop_s = 0.5;
  double sample_rate = 16000.0;
  GmmFitConfig codebook{.components = 64, .max_iters = 50};
  std::size_t codebook_max_frames = 100000;  // frames are strided down to this
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct FeatureRunResult {
  std::vector<std::string> computed;
  std::vector<std::string> up_to_date;
  std::vector<std::pair<std::string, std::string>> failed;  // bag id, error
  std::filesystem::path manifest_out;
  bool codebook_refit = false;
};

// Writes <out>/mfcc/, <out>/codebook.gmm, <out>/instances/ and
// <out>/manifest.jsonl (audio entries replaced by instance files). Outputs
// whose content hash is unchanged are not recomputed. Failed bags are
// reported and left out of the output manifest.
FeatureRunResult cmd_features(const FeatureConfig& cfg);

// Per-segment soft counts for one waveform; rows follow plan_segments.
Matrix segment_soft_counts(const Waveform& w, const GmmModel& codebook, const MfccConfig& mfcc,
                           double window_s, double hop_s);

// Bags to train on: all, or all except those in `exclude_fold` of `folds`.
struct BagSelection {
  std::optional<std::filesystem::path> folds;
  int exclude_fold = -1;
};

GmmModel cmd_ubm(const std::filesystem::path& manifest, const GmmFitConfig& cfg,
                 const BagSelection& sel, const std::filesystem::path& out);

std::size_t cmd_encode(const std::filesystem::path& manifest, const std::filesystem::path& ubm,
                       const EncoderConfig& enc, int jobs, const std::filesystem::path& out);

struct TrainRequest {
  std::filesystem::path manifest;
  std::string event;
  Algorithm algorithm = Algorithm::mifv;
  std::optional<std::filesystem::path> encoded;  // required for encoder methods
  MilTrainConfig train;
  BagSelection selection;
  std::filesystem::path out;
};

LinearModel cmd_train(const TrainRequest& req);

struct EvalRequest {
  std::filesystem::path manifest;
  ExperimentConfig experiment;
  int n_folds = 4;
  std::optional<std::filesystem::path> folds;  // reuse a saved plan
  std::optional<std::string> stratify_event;
  std::filesystem::path out_dir;
};

// Writes report.json (no timings), timing.json, ap.csv and folds.json.
EvalReport cmd_eval(const EvalRequest& req);

struct SweepGrid {
  std::vector<int> components;
  std::vector<double> relevance;
  std::vector<double> C;
  std::vector<Algorithm> algorithms;
};

struct SweepPoint {
  Algorithm algorithm = Algorithm::mifv;
  int components = 0;
  double relevance = 0.0;
  double C = 0.0;
  std::string label;  // summary column name
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::vector<EvalReport> reports;
  std::string summary_csv;
};

// One run_experiment per grid point on a shared fold plan. Encoder methods
// sweep K (and r for supervectors); instance methods only sweep C.
SweepResult cmd_sweep(const EvalRequest& base, const SweepGrid& grid);

TimingReport cmd_bench(const EvalRequest& base, const std::vector<Algorithm>& algorithms,
                       int timed_folds);

struct SynthRequest {
  int dim = 8;
  int n_events = 1;
  double separation = 4.0;
  int background_components = 4;
  double spacing = 10.0;
  SynthConfig config;  // bag counts, sizes, rates, noise and seed
  std::filesystem::path out_dir;
};

SynthDataset cmd_synth(const SynthRequest& req);

}  // namespace wmil
