// src/synth.cpp

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

#include "wmil/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "wmil/binary_io.hpp"
#include "wmil/error.hpp"

namespace wmil {

void SynthConfig::validate() const {
  if (n_bags < 1) throw ConfigError("synth: n_bags must be >= 1");
  if (min_bag_size < 1 || min_bag_size > max_bag_size) {
    throw ConfigError("synth: need 1 <= min_bag_size <= max_bag_size");
  }
  if (!(witness_rate > 0.0 && witness_rate <= 1.0)) {
    throw ConfigError("synth: witness_rate must be in (0, 1]");
  }
  if (!(positive_fraction >= 0.0 && positive_fraction <= 1.0)) {
    throw ConfigError("synth: positive_fraction must be in [0, 1]");
  }
  if (events.empty() || concepts.size() != events.size()) {
    throw ConfigError("synth: need one concept mixture per event");
  }
  if (background.components() == 0) throw ConfigError("synth: background mixture missing");
  for (const auto& c : concepts) {
    if (c.dim() != background.dim()) throw ConfigError("synth: concept/background dimension mismatch");
  }
  if (!(noise_sigma >= 0.0)) throw ConfigError("synth: noise_sigma must be >= 0");
}

SynthConfig make_synth_config(int dim, int n_events, double separation, int background_components,
                              double spacing) {
  if (dim < 2) throw ConfigError("synth: dimension must be >= 2");
  if (n_events < 1) throw ConfigError("synth: need at least one event");
  if (background_components < 1 || background_components > 2 * dim) {
    throw ConfigError("synth: background_components must be in [1, 2 * dim]");
  }
  const auto d = static_cast<std::size_t>(dim);
  const auto nb = static_cast<std::size_t>(background_components);
  auto axis_of = [d](std::size_t c) { return c % d; };
  auto sign_of = [d](std::size_t c) { return c < d ? 1.0 : -1.0; };

  Matrix bg_means(nb, d), bg_vars(nb, d, 1.0);
  for (std::size_t c = 0; c < nb; ++c) bg_means(c, axis_of(c)) = sign_of(c) * spacing;
  SynthConfig cfg;
  cfg.background = GmmModel(std::vector<double>(nb, 1.0 / static_cast<double>(nb)), bg_means, bg_vars);
  cfg.events.clear();
  for (int e = 0; e < n_events; ++e) {
    const std::size_t host = static_cast<std::size_t>(e) % nb;
    Matrix mean(1, d);
    std::copy(bg_means.row(host).begin(), bg_means.row(host).end(), mean.row(0).begin());
    const std::size_t axis = (axis_of(host) + 1 + static_cast<std::size_t>(e) / nb) % d;
    mean(0, axis) += separation;
    cfg.concepts.emplace_back(std::vector<double>{1.0}, mean, Matrix(1, d, 1.0));
    cfg.events.push_back("event" + std::to_string(e));
  }
  return cfg;
}

void sample_gmm(const GmmModel& g, std::mt19937_64& rng, std::span<double> out) {
  std::discrete_distribution<std::size_t> pick(g.weights().begin(), g.weights().end());
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t c = g.components() == 1 ? 0 : pick(rng);
  const auto mu = g.means().row(c);
  const auto var = g.variances().row(c);
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = mu[d] + std::sqrt(var[d]) * normal(rng);
}

SynthDataset generate(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t dim = cfg.dim();
  SynthDataset out;
  for (const auto& e : cfg.events) out.truth[e].resize(static_cast<std::size_t>(cfg.n_bags));
  const int width = static_cast<int>(std::to_string(cfg.n_bags - 1).size());
  for (int b = 0; b < cfg.n_bags; ++b) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(b)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<int> size_dist(cfg.min_bag_size, cfg.max_bag_size);
    std::bernoulli_distribution positive(cfg.positive_fraction);
    std::normal_distribution<double> noise(0.0, 1.0);

    std::size_t size = static_cast<std::size_t>(size_dist(rng));
    std::vector<int> source;  // -1 background, otherwise event index
    for (std::size_t e = 0; e < cfg.events.size(); ++e) {
      if (!positive(rng)) continue;
      const auto witnesses = static_cast<std::size_t>(
          std::ceil(cfg.witness_rate * static_cast<double>(size) - 1e-12));
      source.insert(source.end(), std::max<std::size_t>(witnesses, 1), static_cast<int>(e));
    }
    size = std::max(size, source.size());
    source.resize(size, -1);
    std::shuffle(source.begin(), source.end(), rng);

    std::string id = std::to_string(b);
    id = "bag" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id;
    Bag bag{id, Matrix(size, dim), {}};
    for (std::size_t j = 0; j < size; ++j) {
      const GmmModel& g = source[j] < 0 ? cfg.background : cfg.concepts[static_cast<std::size_t>(source[j])];
      auto row = bag.instances.row(j);
      sample_gmm(g, rng, row);
      if (cfg.noise_sigma > 0.0) {
        for (auto& v : row) v += cfg.noise_sigma * noise(rng);
      }
    }
    for (std::size_t e = 0; e < cfg.events.size(); ++e) {
      auto& truth = out.truth[cfg.events[e]][static_cast<std::size_t>(b)];
      truth.resize(size);
      bool any = false;
      for (std::size_t j = 0; j < size; ++j) {
        truth[j] = source[j] == static_cast<int>(e) ? 1 : 0;
        any = any || truth[j] == 1;
      }
      bag.labels[cfg.events[e]] = any ? Presence::positive : Presence::negative;
    }
    out.dataset.bags.push_back(std::move(bag));
  }
  return out;
}

nlohmann::json truth_to_json(const SynthDataset& s) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [event, per_bag] : s.truth) {
    nlohmann::json bags = nlohmann::json::object();
    for (std::size_t b = 0; b < per_bag.size(); ++b) bags[s.dataset.bags[b].id] = per_bag[b];
    j[event] = bags;
  }
  return j;
}

void save_synth_dataset(const SynthDataset& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "features");
  std::vector<BagManifestEntry> entries;
  for (const auto& bag : s.dataset.bags) {
    const auto rel = std::filesystem::path("features") / (bag.id + ".feat");
    save_feature_matrix(dir / rel, bag.instances);
    BagManifestEntry e{bag.id, rel.generic_string(), {}};
    for (const auto& [name, p] : bag.labels) e.labels.push_back({name, p});
    entries.push_back(std::move(e));
  }
  save_manifest(dir / "manifest.jsonl", entries);
  std::ofstream truth(dir / "truth.json", std::ios::trunc);
  if (!truth) throw Error("cannot write " + (dir / "truth.json").string());
  truth << truth_to_json(s).dump() << '\n';
}

}  // namespace wmil
