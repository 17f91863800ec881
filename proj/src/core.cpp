// src/core.cpp

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

#include "wmil/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "wmil/binary_io.hpp"
#include "wmil/error.hpp"

namespace wmil {

using nlohmann::json;

namespace {

Presence presence_from_json(const json& v, const std::string& where) {
  if (v.is_null()) return Presence::unknown;
  if (v.is_number_integer()) {
    const auto i = v.get<long long>();
    if (i == 1) return Presence::positive;
    if (i == -1) return Presence::negative;
  }
  throw Error(where + ": label must be 1, -1 or null, got " + v.dump());
}

json presence_to_json(Presence p) {
  switch (p) {
    case Presence::positive: return 1;
    case Presence::negative: return -1;
    case Presence::unknown: break;
  }
  return nullptr;
}

}  // namespace

Presence BagManifestEntry::label(const std::string& event) const {
  for (const auto& l : labels) {
    if (l.name == event) return l.present;
  }
  return Presence::unknown;
}

std::vector<BagManifestEntry> parse_manifest(std::istream& in, const std::string& source) {
  std::vector<BagManifestEntry> entries;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    const std::string where = source + ":" + std::to_string(line_no);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(where + ": malformed record: " + e.what());
    }
    if (!rec.is_object()) throw Error(where + ": record is not a JSON object");
    if (!rec.contains("bag_id") || !rec["bag_id"].is_string() ||
        rec["bag_id"].get<std::string>().empty()) {
      throw Error(where + ": missing or empty \"bag_id\"");
    }
    if (!rec.contains("audio") || !rec["audio"].is_string()) {
      throw Error(where + ": missing \"audio\" path");
    }
    BagManifestEntry e;
    e.bag_id = rec["bag_id"].get<std::string>();
    e.audio_path = rec["audio"].get<std::string>();
    if (rec.contains("labels")) {
      const auto& labels = rec["labels"];
      if (!labels.is_object()) throw Error(where + ": \"labels\" must be an object");
      // json objects keep one value per key (the last one parsed).
      for (const auto& [name, value] : labels.items()) {
        if (name.empty()) throw Error(where + ": empty event name");
        e.labels.push_back({name, presence_from_json(value, where)});
      }
    }
    if (!seen.insert(e.bag_id).second) {
      throw Error(where + ": duplicate bag_id \"" + e.bag_id + "\"");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<BagManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("manifest not found: " + path.string());
  return parse_manifest(in, path.string());
}

void write_manifest(std::ostream& out, const std::vector<BagManifestEntry>& entries) {
  for (const auto& e : entries) {
    json labels = json::object();
    for (const auto& l : e.labels) labels[l.name] = presence_to_json(l.present);
    json rec = {{"bag_id", e.bag_id}, {"audio", e.audio_path}, {"labels", labels}};
    out << rec.dump() << '\n';
  }
}

void save_manifest(const std::filesystem::path& path,
                   const std::vector<BagManifestEntry>& entries) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write manifest " + path.string());
  write_manifest(out, entries);
}

std::filesystem::path resolve_audio_path(const std::filesystem::path& manifest_path,
                                         const std::string& audio) {
  std::filesystem::path p(audio);
  if (p.is_absolute()) return p;
  return manifest_path.parent_path() / p;
}

std::vector<std::string> collect_events(const std::vector<BagManifestEntry>& entries) {
  std::set<std::string> names;
  for (const auto& e : entries) {
    for (const auto& l : e.labels) names.insert(l.name);
  }
  return {names.begin(), names.end()};
}

SegmentPlan plan_segments(double duration_s, double window_s, double hop_s) {
  if (!(duration_s > 0.0)) throw Error("plan_segments: duration must be positive");
  if (!(hop_s > 0.0)) throw Error("plan_segments: hop must be positive");
  if (!(window_s > 0.0) || hop_s > window_s) {
    throw Error("plan_segments: need 0 < hop <= window");
  }
  SegmentPlan plan{window_s, hop_s, {}, false};
  if (duration_s < window_s) {
    plan.segments.push_back({0.0, duration_s});
    plan.short_recording = true;
    return plan;
  }
  // Small slack so that exact multiples survive floating-point division.
  const auto count =
      static_cast<std::size_t>(std::floor((duration_s - window_s) / hop_s + 1e-9)) + 1;
  plan.segments.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double start = static_cast<double>(i) * hop_s;
    plan.segments.push_back({start, start + window_s});
  }
  return plan;
}

int FoldPlan::fold_of(const std::string& bag_id) const {
  auto it = assignment.find(bag_id);
  if (it == assignment.end()) throw Error("fold plan has no bag \"" + bag_id + "\"");
  return it->second;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(std::max(n_folds, 0)), 0);
  for (const auto& [id, f] : assignment) ++sizes.at(static_cast<std::size_t>(f));
  return sizes;
}

namespace {

void check_fold_args(std::size_t n_bags, int n_folds) {
  if (n_folds < 2) throw Error("split_folds: need at least 2 folds");
  if (n_bags < static_cast<std::size_t>(n_folds)) {
    throw Error("split_folds: " + std::to_string(n_bags) + " bags is too few for " +
                std::to_string(n_folds) + " folds");
  }
}

}  // namespace

FoldPlan split_folds(const std::vector<std::string>& bag_ids, int n_folds, std::uint64_t seed) {
  check_fold_args(bag_ids.size(), n_folds);
  std::vector<std::string> order(bag_ids);
  // Sort first so the result does not depend on input order.
  std::sort(order.begin(), order.end());
  if (std::adjacent_find(order.begin(), order.end()) != order.end()) {
    throw Error("split_folds: duplicate bag ids");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  FoldPlan plan;
  plan.n_folds = n_folds;
  for (std::size_t i = 0; i < order.size(); ++i) {
    plan.assignment[order[i]] = static_cast<int>(i % static_cast<std::size_t>(n_folds));
  }
  return plan;
}

FoldPlan split_folds_stratified(const std::vector<BagManifestEntry>& entries,
                                const std::string& event, int n_folds, std::uint64_t seed) {
  check_fold_args(entries.size(), n_folds);
  std::vector<std::string> groups[3];
  for (const auto& e : entries) groups[static_cast<int>(e.label(event))].push_back(e.bag_id);
  std::mt19937_64 rng(seed);
  FoldPlan plan;
  plan.n_folds = n_folds;
  std::size_t dealt = 0;
  for (auto& g : groups) {
    std::sort(g.begin(), g.end());
    std::shuffle(g.begin(), g.end(), rng);
    for (const auto& id : g) {
      if (!plan.assignment.emplace(id, static_cast<int>(dealt % n_folds)).second) {
        throw Error("split_folds: duplicate bag id \"" + id + "\"");
      }
      ++dealt;
    }
  }
  return plan;
}

json fold_plan_to_json(const FoldPlan& plan) {
  return {{"n_folds", plan.n_folds}, {"assignment", plan.assignment}};
}

FoldPlan fold_plan_from_json(const json& j) {
  FoldPlan plan;
  plan.n_folds = j.at("n_folds").get<int>();
  plan.assignment = j.at("assignment").get<std::map<std::string, int>>();
  for (const auto& [id, f] : plan.assignment) {
    if (f < 0 || f >= plan.n_folds) throw Error("fold plan: bag \"" + id + "\" out of range");
  }
  return plan;
}

Presence Bag::label(const std::string& event) const {
  auto it = labels.find(event);
  return it == labels.end() ? Presence::unknown : it->second;
}

std::vector<std::string> Dataset::events() const {
  std::set<std::string> names;
  for (const auto& b : bags) {
    for (const auto& [name, p] : b.labels) names.insert(name);
  }
  return {names.begin(), names.end()};
}

std::vector<std::string> Dataset::bag_ids() const {
  std::vector<std::string> ids;
  ids.reserve(bags.size());
  for (const auto& b : bags) ids.push_back(b.id);
  return ids;
}

std::size_t Dataset::instance_count() const {
  std::size_t n = 0;
  for (const auto& b : bags) n += b.instances.rows();
  return n;
}

std::size_t Dataset::dim() const { return bags.empty() ? 0 : bags.front().instances.cols(); }

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  const auto entries = load_manifest(manifest_path);
  Dataset ds;
  ds.bags.reserve(entries.size());
  for (const auto& e : entries) {
    const auto path = resolve_audio_path(manifest_path, e.audio_path);
    if (!is_feature_matrix_file(path)) {
      throw Error("bag \"" + e.bag_id + "\": " + path.string() +
                  " is not a feature matrix file (run `wmil features` first)");
    }
    Bag bag{e.bag_id, load_feature_matrix(path), {}};
    for (const auto& l : e.labels) bag.labels[l.name] = l.present;
    if (bag.instances.empty()) throw Error("bag \"" + e.bag_id + "\" has no instances");
    if (!ds.bags.empty() && bag.instances.cols() != ds.dim()) {
      throw Error("bag \"" + e.bag_id + "\": instance dimension mismatch");
    }
    ds.bags.push_back(std::move(bag));
  }
  return ds;
}

}  // namespace wmil
