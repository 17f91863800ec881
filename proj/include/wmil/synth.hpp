// include/wmil/synth.hpp

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
#include <map>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "wmil/core.hpp"
#include "wmil/gmm.hpp"

namespace wmil {

struct SynthConfig {
  int n_bags = 200;
  int min_bag_size = 10;
  int max_bag_size = 30;
  double witness_rate = 0.2;       // fraction of a positive bag drawn from the concept
  double positive_fraction = 0.5;  // per-event probability that a bag is positive
  std::vector<std::string> events{"event"};
  std::vector<GmmModel> concepts;  // one per event
  GmmModel background;
  double noise_sigma = 0.0;        // isotropic noise added to every instance
  std::uint64_t seed = 0;

  std::size_t dim() const { return background.dim(); }
  void validate() const;
};

// Standard layout: `background_components` unit-variance Gaussians placed
// `spacing` apart on signed coordinate axes, and one unit-variance concept
// per event whose mean sits `separation` standard deviations from one
// background mean (along an axis orthogonal to that component's offset).
SynthConfig make_synth_config(int dim, int n_events, double separation,
                              int background_components = 4, double spacing = 10.0);

struct SynthDataset {
  Dataset dataset;
  // event -> per bag, per instance: 1 if drawn from the event concept.
  std::map<std::string, std::vector<std::vector<int>>> truth;
};

// Positive bags draw ceil(witness_rate * size) instances per positive event
// from that event's concept and the rest from the background; negative bags
// are all background. Each bag uses its own RNG stream derived from the seed.
SynthDataset generate(const SynthConfig& cfg);

// Draws one sample from a diagonal mixture.
void sample_gmm(const GmmModel& g, std::mt19937_64& rng, std::span<double> out);

// Writes manifest.jsonl, features/<bag>.feat and truth.json under `dir`.
// The truth sidecar is never read by training code.
void save_synth_dataset(const SynthDataset& s, const std::filesystem::path& dir);

nlohmann::json truth_to_json(const SynthDataset& s);

}  // namespace wmil
