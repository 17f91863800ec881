// include/wmil/eval.hpp

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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "wmil/core.hpp"
#include "wmil/encode.hpp"
#include "wmil/gmm.hpp"
#include "wmil/svm.hpp"

namespace wmil {

struct RankedEntry {
  std::string bag_id;
  double score = 0.0;
  int label = -1;  // +1 / -1
};

// Entries sorted by score descending, ties by bag_id ascending.
struct RankedResult {
  std::vector<RankedEntry> entries;

  static RankedResult rank(std::vector<RankedEntry> entries);
};

// Non-interpolated AP: mean over positives of the precision at their rank.
double average_precision(const RankedResult& results);

double mean_average_precision(const std::map<std::string, double>& aps);

enum class Algorithm { misvm, MISVM, mifv, misup, misup_mn };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);
bool is_encoder_algorithm(Algorithm a);

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::mifv;
  int components = 4;            // K of the instance-space UBM
  double relevance = 16.0;       // miSUP relevance factor r
  bool ifv = true;
  FvLayout fv_layout = FvLayout::mean_var;
  bool zscore_supervectors = false;
  GmmFitConfig ubm;              // `components` and `seed` are overridden
  MilTrainConfig train;
  std::uint64_t seed = 0;
  int jobs = 1;

  EncoderConfig encoder() const;
  nlohmann::json to_json() const;
};

// Seed for a pipeline stage, derived from the top-level seed by hashing
// "<seed>/<stage>/<fold>/<event>".
std::uint64_t derive_seed(std::uint64_t seed, const std::string& stage, int fold = -1,
                          const std::string& event = {});

struct ScoreRecord {
  std::string bag_id;
  double score = 0.0;
  int label = -1;
  int fold = -1;  // fold whose model produced the score
};

struct FoldDetail {
  int fold = 0;
  std::vector<std::string> train_bags;
  std::vector<std::string> test_bags;
  std::map<std::string, int> mil_iterations;  // event -> outer iterations (instance methods)
};

struct EvalReport {
  std::string algorithm;
  nlohmann::json config;
  std::map<std::string, double> per_event_ap;
  double map = 0.0;
  std::map<std::string, std::vector<ScoreRecord>> scores;  // event -> ranked pooled scores
  std::vector<FoldDetail> folds;
  std::vector<std::string> skipped_events;
  std::vector<std::string> warnings;
  std::map<std::string, double> timing;  // phase -> seconds (ubm, encode, svm, total)
};

// Leave-one-fold-out training; every bag is scored by the model of its own
// fold and the pooled scores are ranked per event. Bags with unknown labels
// for an event are excluded from that event's pools.
EvalReport run_experiment(const Dataset& data, const ExperimentConfig& cfg, const FoldPlan& folds);

// Timings are omitted when include_timing is false so that reports from
// identical runs compare byte-for-byte.
nlohmann::json report_to_json(const EvalReport& r, bool include_timing = true);

// events x methods AP table with a trailing MAP row.
std::string ap_table_csv(const std::map<std::string, EvalReport>& by_method);

struct AlgorithmTiming {
  std::map<std::string, double> per_event_s;  // mean over timed folds
  double mean_s = 0.0;                        // mean over events
  double log10_mean_s = 0.0;
  std::map<std::string, double> phase_mean_s;  // ubm, encode, svm
};

struct TimingReport {
  std::map<std::string, AlgorithmTiming> algorithms;
};

// Wall-clock training time per event for each algorithm on the same data and
// folds. For encoder methods one training run is UBM fit + encoding of the
// training bags + SVM; for instance methods it is the full MIL loop.
TimingReport benchmark_training(std::span<const ExperimentConfig> algorithms, const Dataset& data,
                                const FoldPlan& folds, int timed_folds = 1);

nlohmann::json timing_to_json(const TimingReport& t);

}  // namespace wmil
