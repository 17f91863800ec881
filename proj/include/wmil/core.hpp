// include/wmil/core.hpp

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
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "wmil/matrix.hpp"

namespace wmil {

enum class Presence { positive, negative, unknown };

struct EventLabel {
  std::string name;
  Presence present = Presence::unknown;

  bool operator==(const EventLabel&) const = default;
};

// One manifest record: a recording (bag) and its weak per-event labels.
struct BagManifestEntry {
  std::string bag_id;
  std::string audio_path;
  std::vector<EventLabel> labels;  // sorted by event name, one per event

  Presence label(const std::string& event) const;
  bool operator==(const BagManifestEntry&) const = default;
};

// JSON-lines manifest: {"bag_id": str, "audio": str, "labels": {event: 1 | -1}}.
// Events missing from "labels" are unknown. Blank lines are skipped.
std::vector<BagManifestEntry> load_manifest(const std::filesystem::path& path);
std::vector<BagManifestEntry> parse_manifest(std::istream& in, const std::string& source);
void write_manifest(std::ostream& out, const std::vector<BagManifestEntry>& entries);
void save_manifest(const std::filesystem::path& path, const std::vector<BagManifestEntry>& entries);

// Audio paths in a manifest are relative to the manifest's directory.
std::filesystem::path resolve_audio_path(const std::filesystem::path& manifest_path,
                                         const std::string& audio);

// Sorted union of event names over all entries.
std::vector<std::string> collect_events(const std::vector<BagManifestEntry>& entries);

struct Segment {
  double start_s = 0.0;
  double end_s = 0.0;
};

struct SegmentPlan {
  double window_s = 0.0;
  double hop_s = 0.0;
  std::vector<Segment> segments;
  bool short_recording = false;  // duration < window; single clamped segment
};

SegmentPlan plan_segments(double duration_s, double window_s, double hop_s);

struct FoldPlan {
  int n_folds = 0;
  std::map<std::string, int> assignment;

  int fold_of(const std::string& bag_id) const;
  std::vector<std::size_t> fold_sizes() const;
};

// Uniform random split by bag: shuffle with `seed`, then deal round-robin.
FoldPlan split_folds(const std::vector<std::string>& bag_ids, int n_folds, std::uint64_t seed);

// Optional stratified split: bags are grouped by their label for `event`
// (positive, negative, unknown), each group shuffled and dealt in turn.
FoldPlan split_folds_stratified(const std::vector<BagManifestEntry>& entries,
                                const std::string& event, int n_folds, std::uint64_t seed);

nlohmann::json fold_plan_to_json(const FoldPlan& plan);
FoldPlan fold_plan_from_json(const nlohmann::json& j);

// In-memory bag: instance matrix (one instance per row) plus weak labels.
struct Bag {
  std::string id;
  Matrix instances;
  std::map<std::string, Presence> labels;

  Presence label(const std::string& event) const;
};

struct Dataset {
  std::vector<Bag> bags;

  std::vector<std::string> events() const;
  std::vector<std::string> bag_ids() const;
  std::size_t instance_count() const;
  std::size_t dim() const;
};

// Loads a manifest whose "audio" entries point at feature matrix files.
Dataset load_dataset(const std::filesystem::path& manifest_path);

}  // namespace wmil
