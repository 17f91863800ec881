// src/pipeline.cpp

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

#include "wmil/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>

#include "wmil/binary_io.hpp"
#include "wmil/error.hpp"
#include "wmil/mil.hpp"
#include "wmil/parallel.hpp"

namespace wmil {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

fs::path hash_path(const fs::path& p) {
  auto h = p;
  h += ".hash";
  return h;
}

bool up_to_date(const fs::path& output, const std::string& key) {
  if (!fs::exists(output)) return false;
  std::ifstream in(hash_path(output));
  std::string stored;
  return in && std::getline(in, stored) && stored == key;
}

void stamp(const fs::path& output, const std::string& key) {
  std::ofstream out(hash_path(output), std::ios::trunc);
  if (!out) throw Error("cannot write " + hash_path(output).string());
  out << key << '\n';
}

std::string mfcc_key(const MfccConfig& c, double sample_rate) {
  std::ostringstream s;
  s << std::setprecision(17) << "mfcc:" << c.n_coeffs << ':' << c.frame_len_s << ':'
    << c.frame_hop_s << ':' << c.n_mel_filters << ':' << c.fft_size << ':' << c.pre_emphasis
    << ':' << c.log_floor << ':' << c.low_freq_hz << ':' << c.high_freq_hz << ':' << sample_rate;
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

Dataset select_bags(const fs::path& manifest, const BagSelection& sel) {
  auto data = load_dataset(manifest);
  if (!sel.folds) return data;
  std::ifstream in(*sel.folds);
  if (!in) throw ConfigError("fold plan not found: " + sel.folds->string());
  const auto plan = fold_plan_from_json(json::parse(in));
  std::erase_if(data.bags, [&](const Bag& b) { return plan.fold_of(b.id) == sel.exclude_fold; });
  return data;
}

FoldPlan make_plan(const Dataset& data, const EvalRequest& req) {
  if (req.folds) {
    std::ifstream in(*req.folds);
    if (!in) throw ConfigError("fold plan not found: " + req.folds->string());
    return fold_plan_from_json(json::parse(in));
  }
  if (req.stratify_event) {
    std::vector<BagManifestEntry> entries;
    for (const auto& b : data.bags) {
      BagManifestEntry e{b.id, "", {}};
      for (const auto& [n, p] : b.labels) e.labels.push_back({n, p});
      entries.push_back(std::move(e));
    }
    return split_folds_stratified(entries, *req.stratify_event, req.n_folds,
                                  derive_seed(req.experiment.seed, "folds"));
  }
  return split_folds(data.bag_ids(), req.n_folds, derive_seed(req.experiment.seed, "folds"));
}

}  // namespace

Matrix segment_soft_counts(const Waveform& w, const GmmModel& codebook, const MfccConfig& mfcc_cfg,
                           double window_s, double hop_s) {
  const auto plan = plan_segments(w.duration_s(), window_s, hop_s);
  Matrix out(plan.segments.size(), codebook.components());
  const auto n = w.samples.size();
  for (std::size_t s = 0; s < plan.segments.size(); ++s) {
    const auto& seg = plan.segments[s];
    const auto begin = std::min(n, static_cast<std::size_t>(std::lround(seg.start_s * w.sample_rate)));
    const auto end = std::min(n, static_cast<std::size_t>(std::lround(seg.end_s * w.sample_rate)));
    Waveform piece{std::vector<double>(w.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                                       w.samples.begin() + static_cast<std::ptrdiff_t>(end)),
                   w.sample_rate};
    const auto counts = soft_count(codebook, mfcc(piece, mfcc_cfg));
    std::copy(counts.begin(), counts.end(), out.row(s).begin());
  }
  return out;
}

FeatureRunResult cmd_features(const FeatureConfig& cfg) {
  if (cfg.codebook_size < 1) throw ConfigError("features: codebook size must be >= 1");
  cfg.mfcc.validate(cfg.sample_rate);
  plan_segments(cfg.window_s, cfg.window_s, cfg.hop_s);  // validates window/hop
  const auto entries = load_manifest(cfg.manifest);
  const auto mkey = mfcc_key(cfg.mfcc, cfg.sample_rate);
  FeatureRunResult result;
  std::mutex result_mutex;
  auto fail = [&](const std::string& id, const std::string& msg) {
    std::lock_guard lock(result_mutex);
    result.failed.emplace_back(id, msg);
  };

  // Stage 1: whole-recording MFCC, used to train the codebook.
  std::vector<std::string> audio_hash(entries.size());
  std::vector<char> ok(entries.size(), 0);
  parallel_for(entries.size(), cfg.jobs, [&](std::size_t i) {
    const auto& e = entries[i];
    try {
      const auto audio = resolve_audio_path(cfg.manifest, e.audio_path);
      audio_hash[i] = hex64(fnv1a64(read_file_bytes(audio)));
      const auto out = cfg.out_dir / "mfcc" / (e.bag_id + ".feat");
      const auto key = audio_hash[i] + ":" + mkey;
      if (!up_to_date(out, key)) {
        const auto w = read_wav(audio);
        if (w.sample_rate != cfg.sample_rate) {
          throw Error("sample rate " + std::to_string(static_cast<int>(w.sample_rate)) +
                      " Hz does not match the configured " +
                      std::to_string(static_cast<int>(cfg.sample_rate)) + " Hz");
        }
        save_feature_matrix(out, mfcc(w, cfg.mfcc));
        stamp(out, key);
      }
      ok[i] = true;
    } catch (const std::exception& ex) {
      fail(e.bag_id, ex.what());
    }
  });

  // Stage 2: audio-word codebook over (strided) frames of all good bags.
  std::string codebook_key = "codebook:" + std::to_string(cfg.codebook_size) + ":" +
                             std::to_string(cfg.seed) + ":" + mkey + ":" +
                             std::to_string(cfg.codebook_max_frames);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (ok[i]) codebook_key += ":" + audio_hash[i];
  }
  codebook_key = hex64(fnv1a64(codebook_key));
  const auto codebook_path = cfg.out_dir / "codebook.gmm";
  GmmModel codebook;
  if (up_to_date(codebook_path, codebook_key)) {
    codebook = load_gmm(codebook_path);
  } else {
    std::vector<Matrix> parts;
    std::size_t total = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (!ok[i]) continue;
      parts.push_back(load_feature_matrix(cfg.out_dir / "mfcc" / (entries[i].bag_id + ".feat")));
      total += parts.back().rows();
    }
    if (parts.empty()) throw Error("features: no recording could be processed");
    const std::size_t stride =
        std::max<std::size_t>(1, (total + cfg.codebook_max_frames - 1) / cfg.codebook_max_frames);
    const auto all = vstack(parts);
    Matrix frames(0, 0);
    for (std::size_t r = 0; r < all.rows(); r += stride) frames.append_row(all.row(r));
    GmmFitConfig gcfg = cfg.codebook;
    gcfg.components = cfg.codebook_size;
    gcfg.seed = derive_seed(cfg.seed, "codebook");
    codebook = fit_gmm(frames, gcfg).model;
    save_gmm(codebook_path, codebook);
    stamp(codebook_path, codebook_key);
    result.codebook_refit = true;
  }

  // Stage 3: per-segment soft counts.
  std::ostringstream seg;
  seg << std::setprecision(17) << cfg.window_s << ':' << cfg.hop_s;
  std::vector<int> state(entries.size(), 0);  // 1 computed, 2 up to date
  parallel_for(entries.size(), cfg.jobs, [&](std::size_t i) {
    if (!ok[i]) return;
    const auto& e = entries[i];
    try {
      const auto out = cfg.out_dir / "instances" / (e.bag_id + ".feat");
      const auto key = audio_hash[i] + ":" + codebook_key + ":" + mkey + ":" + seg.str();
      if (up_to_date(out, key)) {
        state[i] = 2;
        return;
      }
      const auto w = read_wav(resolve_audio_path(cfg.manifest, e.audio_path));
      save_feature_matrix(out, segment_soft_counts(w, codebook, cfg.mfcc, cfg.window_s, cfg.hop_s));
      stamp(out, key);
      state[i] = 1;
    } catch (const std::exception& ex) {
      ok[i] = false;
      fail(e.bag_id, ex.what());
    }
  });

  std::vector<BagManifestEntry> out_entries;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!ok[i]) continue;
    auto e = entries[i];
    e.audio_path = (fs::path("instances") / (e.bag_id + ".feat")).generic_string();
    out_entries.push_back(std::move(e));
    (state[i] == 1 ? result.computed : result.up_to_date).push_back(entries[i].bag_id);
  }
  std::sort(result.failed.begin(), result.failed.end());
  result.manifest_out = cfg.out_dir / "manifest.jsonl";
  save_manifest(result.manifest_out, out_entries);
  return result;
}

GmmModel cmd_ubm(const fs::path& manifest, const GmmFitConfig& cfg, const BagSelection& sel,
                 const fs::path& out) {
  const auto data = select_bags(manifest, sel);
  if (data.bags.empty()) throw Error("ubm: no bags selected");
  std::vector<Matrix> parts;
  for (const auto& b : data.bags) parts.push_back(b.instances);
  auto model = fit_gmm(vstack(parts), cfg).model;
  save_gmm(out, model);
  return model;
}

std::size_t cmd_encode(const fs::path& manifest, const fs::path& ubm_path, const EncoderConfig& enc,
                       int jobs, const fs::path& out) {
  enc.validate();
  const auto data = load_dataset(manifest);
  const auto ubm = load_gmm(ubm_path);
  std::vector<EncodedBag> encoded(data.bags.size());
  parallel_for(data.bags.size(), jobs, [&](std::size_t i) {
    encoded[i] = encode_bag(ubm, data.bags[i].instances, enc);
  });
  std::map<std::string, EncodedBag> table;
  for (std::size_t i = 0; i < data.bags.size(); ++i) table[data.bags[i].id] = std::move(encoded[i]);
  save_encoded_table(out, table);
  return table.size();
}

LinearModel cmd_train(const TrainRequest& req) {
  const auto data = select_bags(req.manifest, req.selection);
  std::vector<int> labels;
  std::vector<const Bag*> bags;
  for (const auto& b : data.bags) {
    const auto p = b.label(req.event);
    if (p == Presence::unknown) continue;
    bags.push_back(&b);
    labels.push_back(p == Presence::positive ? 1 : -1);
  }
  LinearModel model;
  json sidecar = {{"event", req.event}, {"algorithm", to_string(req.algorithm)}};
  if (is_encoder_algorithm(req.algorithm)) {
    if (!req.encoded) throw ConfigError("train: --encoded is required for " + to_string(req.algorithm));
    const auto table = load_encoded_table(*req.encoded);
    Matrix x(0, 0);
    for (const auto* b : bags) {
      auto it = table.find(b->id);
      if (it == table.end()) throw Error("train: bag \"" + b->id + "\" missing from encoded table");
      x.append_row(it->second.values);
    }
    SvmTrainInfo info;
    model = train_linear_svm(x, labels, req.train, &info);
    sidecar["iterations"] = info.iterations;
    sidecar["converged"] = info.converged;
  } else {
    std::vector<Matrix> mats;
    for (const auto* b : bags) mats.push_back(b->instances);
    const auto [m, state] = req.algorithm == Algorithm::misvm
                                ? train_misvm(mats, labels, req.train)
                                : train_MISVM(mats, labels, req.train);
    model = m;
    sidecar["iterations"] = state.iteration;
    sidecar["converged"] = state.converged;
    sidecar["cycle_detected"] = state.cycle_detected;
  }
  save_linear_model(req.out, model, sidecar);
  return model;
}

EvalReport cmd_eval(const EvalRequest& req) {
  const auto data = load_dataset(req.manifest);
  const auto plan = make_plan(data, req);
  auto report = run_experiment(data, req.experiment, plan);
  fs::create_directories(req.out_dir);
  write_text(req.out_dir / "report.json", report_to_json(report, false).dump(2) + "\n");
  write_text(req.out_dir / "timing.json", json(report.timing).dump(2) + "\n");
  write_text(req.out_dir / "folds.json", fold_plan_to_json(plan).dump(2) + "\n");
  write_text(req.out_dir / "ap.csv", ap_table_csv({{report.algorithm, report}}));
  return report;
}

SweepResult cmd_sweep(const EvalRequest& base, const SweepGrid& grid) {
  if (grid.components.empty() || grid.relevance.empty() || grid.C.empty() ||
      grid.algorithms.empty()) {
    throw ConfigError("sweep: empty grid");
  }
  const auto data = load_dataset(base.manifest);
  const auto plan = make_plan(data, base);
  fs::create_directories(base.out_dir);
  write_text(base.out_dir / "folds.json", fold_plan_to_json(plan).dump(2) + "\n");

  auto fmt = [](double v) {
    std::ostringstream s;
    s << v;
    return s.str();
  };
  SweepResult result;
  for (auto algo : grid.algorithms) {
    const bool enc = is_encoder_algorithm(algo);
    const bool uses_r = algo == Algorithm::misup || algo == Algorithm::misup_mn;
    const std::vector<int> ks = enc ? grid.components : std::vector<int>{base.experiment.components};
    const std::vector<double> rs = uses_r ? grid.relevance : std::vector<double>{base.experiment.relevance};
    for (int k : ks) {
      for (double r : rs) {
        for (double c : grid.C) {
          SweepPoint p{algo, k, r, c, to_string(algo)};
          if (enc) p.label += " K=" + std::to_string(k);
          if (uses_r && grid.relevance.size() > 1) p.label += " r=" + fmt(r);
          if (grid.C.size() > 1) p.label += " C=" + fmt(c);
          result.points.push_back(std::move(p));
        }
      }
    }
  }
  std::map<std::string, EvalReport> by_label;
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    const auto& p = result.points[i];
    ExperimentConfig cfg = base.experiment;
    cfg.algorithm = p.algorithm;
    cfg.components = p.components;
    cfg.relevance = p.relevance;
    cfg.train.C = p.C;
    auto report = run_experiment(data, cfg, plan);
    std::ostringstream name;
    name << "point" << std::setw(3) << std::setfill('0') << i << ".json";
    write_text(base.out_dir / "reports" / name.str(), report_to_json(report, false).dump(2) + "\n");
    by_label[p.label] = report;
    result.reports.push_back(std::move(report));
  }
  // Column order follows the grid, not the map order.
  std::set<std::string> events;
  for (const auto& r : result.reports) {
    for (const auto& [e, ap] : r.per_event_ap) events.insert(e);
  }
  std::ostringstream csv;
  csv.setf(std::ios::fixed);
  csv.precision(3);
  csv << "event";
  for (const auto& p : result.points) csv << ',' << p.label;
  csv << '\n';
  for (const auto& e : events) {
    csv << e;
    for (const auto& r : result.reports) {
      csv << ',';
      if (auto it = r.per_event_ap.find(e); it != r.per_event_ap.end()) csv << it->second;
    }
    csv << '\n';
  }
  csv << "MAP";
  for (const auto& r : result.reports) csv << ',' << r.map;
  csv << '\n';
  result.summary_csv = csv.str();
  write_text(base.out_dir / "summary.csv", result.summary_csv);
  json timing = json::object();
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    timing[result.points[i].label] = result.reports[i].timing;
  }
  write_text(base.out_dir / "timing.json", timing.dump(2) + "\n");
  return result;
}

TimingReport cmd_bench(const EvalRequest& base, const std::vector<Algorithm>& algorithms,
                       int timed_folds) {
  if (algorithms.empty()) throw ConfigError("bench: no algorithms given");
  const auto data = load_dataset(base.manifest);
  const auto plan = make_plan(data, base);
  std::vector<ExperimentConfig> cfgs;
  for (auto a : algorithms) {
    auto c = base.experiment;
    c.algorithm = a;
    cfgs.push_back(c);
  }
  auto report = benchmark_training(cfgs, data, plan, timed_folds);
  write_text(base.out_dir / "timing.json", timing_to_json(report).dump(2) + "\n");
  return report;
}

SynthDataset cmd_synth(const SynthRequest& req) {
  auto cfg = make_synth_config(req.dim, req.n_events, req.separation, req.background_components,
                               req.spacing);
  cfg.n_bags = req.config.n_bags;
  cfg.min_bag_size = req.config.min_bag_size;
  cfg.max_bag_size = req.config.max_bag_size;
  cfg.witness_rate = req.config.witness_rate;
  cfg.positive_fraction = req.config.positive_fraction;
  cfg.noise_sigma = req.config.noise_sigma;
  cfg.seed = req.config.seed;
  auto ds = generate(cfg);
  save_synth_dataset(ds, req.out_dir);
  return ds;
}

}  // namespace wmil
