// Copyright 2026 The partlift Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// End-to-end label lifting:
//   partition proposals -> sample pixels -> database search -> mask labels
//   -> consistency graph -> final mask labels -> back-projection -> metrics.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "partlift/consistency/graph.hpp"
#include "partlift/core/parallel.hpp"
#include "partlift/core/random.hpp"
#include "partlift/correspond/match.hpp"
#include "partlift/eval/iou.hpp"
#include "partlift/geometry/backproject.hpp"
#include "partlift/geometry/rasterize.hpp"
#include "partlift/masks2d/labeling.hpp"
#include "partlift/masks2d/partition.hpp"
#include "partlift/pipeline/cache.hpp"
#include "partlift/pipeline/config.hpp"
#include "partlift/pipeline/dataset.hpp"
#include "partlift/pipeline/ply.hpp"

namespace partlift {

struct PipelineCounters {
  std::uint64_t views = 0;
  std::uint64_t points = 0;
  std::uint64_t database_images = 0;
  std::uint64_t proposals = 0;
  std::uint64_t proposals_empty = 0;
  std::uint64_t proposals_occluded = 0;
  std::uint64_t masks = 0;
  std::uint64_t samples = 0;
  std::uint64_t samples_background = 0;
  std::uint64_t masks_labeled = 0;
  std::uint64_t masks_abstained = 0;
  SearchCounters search;
  std::uint64_t graph_vertices = 0;
  std::uint64_t graph_edges = 0;
  std::uint64_t discarded_vertices = 0;
  std::uint64_t points_labeled = 0;
  std::uint64_t points_unlabeled = 0;
  bool cache_hit = false;

  /// Adds the per-view counters of the labeling stage.
  void add_view(const PipelineCounters& v) {
    proposals += v.proposals;
    proposals_empty += v.proposals_empty;
    proposals_occluded += v.proposals_occluded;
    masks += v.masks;
    samples += v.samples;
    samples_background += v.samples_background;
    masks_labeled += v.masks_labeled;
    masks_abstained += v.masks_abstained;
    search += v.search;
  }

  nlohmann::json view_stage_json() const {
    return {{"proposals", proposals},
            {"proposals_empty", proposals_empty},
            {"proposals_occluded", proposals_occluded},
            {"masks", masks},
            {"samples", samples},
            {"samples_background", samples_background},
            {"masks_labeled", masks_labeled},
            {"masks_abstained", masks_abstained},
            {"queries", search.queries},
            {"similarity_evaluations", search.similarity_evaluations}};
  }

  static PipelineCounters from_view_stage_json(const nlohmann::json& j) {
    PipelineCounters c;
    c.proposals = j.at("proposals").get<std::uint64_t>();
    c.proposals_empty = j.at("proposals_empty").get<std::uint64_t>();
    c.proposals_occluded = j.at("proposals_occluded").get<std::uint64_t>();
    c.masks = j.at("masks").get<std::uint64_t>();
    c.samples = j.at("samples").get<std::uint64_t>();
    c.samples_background = j.at("samples_background").get<std::uint64_t>();
    c.masks_labeled = j.at("masks_labeled").get<std::uint64_t>();
    c.masks_abstained = j.at("masks_abstained").get<std::uint64_t>();
    c.search.queries = j.at("queries").get<std::uint64_t>();
    c.search.similarity_evaluations = j.at("similarity_evaluations").get<std::uint64_t>();
    return c;
  }

  nlohmann::json to_json() const {
    auto j = view_stage_json();
    j["views"] = views;
    j["points"] = points;
    j["database_images"] = database_images;
    j["graph_vertices"] = graph_vertices;
    j["graph_edges"] = graph_edges;
    j["discarded_vertices"] = discarded_vertices;
    j["points_labeled"] = points_labeled;
    j["points_unlabeled"] = points_unlabeled;
    return j;
  }
};

/// Per-view state kept between stages.
struct ViewResult {
  std::string name;
  PixelPointMap map;
  MaskPartition partition;
  std::vector<MaskLabel> mask_labels;
  std::vector<LabelId> final_mask_labels;
  PipelineCounters counters;
};

struct PipelineResult {
  PartVocabulary vocabulary;
  PointCloud cloud;
  std::vector<ViewResult> views;
  MaskConsistencyGraph graph;
  std::vector<bool> discarded;
  std::vector<LabelId> point_labels;
  std::optional<IoUReport> standard;
  std::optional<IoUReport> partnete;
  PipelineCounters counters;
  std::map<std::string, double> timings_ms;

  /// Metrics document; `with_timings` false drops the only
  /// run-to-run varying field.
  nlohmann::json metrics_json(MetricMode mode, bool with_timings = true) const {
    nlohmann::json j;
    j["mode"] = metric_name(mode);
    const auto& selected = mode == MetricMode::kStandard ? standard : partnete;
    if (selected) {
      const auto r = selected->to_json(&vocabulary);
      j["per_part"] = r["per_part"];
      j["category_miou"] = r["category_miou"];
      j["miou"] = {{"standard", standard->category_miou}, {"partnete", partnete->category_miou}};
    } else {
      j["per_part"] = nlohmann::json::object();
      j["category_miou"] = nullptr;
      j["miou"] = nullptr;
    }
    j["counters"] = counters.to_json();
    if (with_timings) j["timings_ms"] = timings_ms;
    return j;
  }

  /// Per-pixel final labels of one view.
  std::vector<LabelId> pixel_labels(std::size_t v) const {
    const auto& view = views[v];
    std::vector<LabelId> out(view.partition.pixel_count(), kNoLabel);
    for (std::size_t p = 0; p < out.size(); ++p) {
      const auto id = view.partition.id_map[p];
      if (id >= 0) out[p] = view.final_mask_labels[static_cast<std::size_t>(id)];
    }
    return out;
  }
};

namespace detail {

class StageClock {
 public:
  explicit StageClock(std::map<std::string, double>& sink) : sink_(sink) {}
  void lap(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    sink_[stage] = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
  }

 private:
  std::map<std::string, double>& sink_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

inline PixelPointMap view_pixel_map(const std::filesystem::path& dir, const PointCloud& cloud,
                                    const CameraModel& cam, const PipelineConfig& cfg) {
  if (std::filesystem::exists(dir / layout::kIndices)) {
    layout::require_file(dir / layout::kDepth);
    auto map = PixelPointMap::from_tensors(load_tensor(dir / layout::kIndices), load_tensor(dir / layout::kDepth));
    if (map.width != cam.width || map.height != cam.height) {
      throw ValidationError((dir / layout::kIndices).string() + ": pixel map resolution differs from the camera");
    }
    try {
      map.validate(cloud.size());
    } catch (const Error& e) {
      throw ValidationError((dir / layout::kIndices).string() + ": " + e.what());
    }
    return map;
  }
  return project_points(cloud, cam, cfg.splat_radius);
}

/// Partition, sample, search and vote for one view's masks.
inline void label_view_masks(const std::filesystem::path& dir, std::size_t view_index, const LabeledDatabase& db,
                             const PipelineConfig& cfg, ViewResult& out) {
  const Tensor stack = load_tensor(dir / layout::kMasks);
  expect_tensor(stack, DType::kU8, 3, (dir / layout::kMasks).string());
  if (static_cast<int>(stack.dim(1)) != cfg.height || static_cast<int>(stack.dim(2)) != cfg.width) {
    throw ValidationError((dir / layout::kMasks).string() + ": masks are " + std::to_string(stack.dim(1)) +
                          "x" + std::to_string(stack.dim(2)) + ", config expects " +
                          std::to_string(cfg.height) + "x" + std::to_string(cfg.width));
  }
  std::size_t empty = 0;
  const auto proposals = proposals_from_tensor(stack, &empty);
  out.partition = build_nonoverlapping(cfg.height, cfg.width, proposals);
  out.counters.proposals = proposals.size() + empty;
  out.counters.proposals_empty = empty;
  out.counters.proposals_occluded = proposals.size() - static_cast<std::size_t>(out.partition.mask_count);
  out.counters.masks = static_cast<std::uint64_t>(out.partition.mask_count);

  const FeatureGrid grid = FeatureGrid::load(dir / layout::kFeatures);
  grid.check_covers(cfg.height, cfg.width);
  if (grid.channels() != db.images.front().fine.channels()) {
    throw ValidationError((dir / layout::kFeatures).string() + ": " + std::to_string(grid.channels()) +
                          " channels, database has " + std::to_string(db.images.front().fine.channels()));
  }
  const SearchOptions search{cfg.search, cfg.window};
  const std::uint64_t view_seed = mix_seed(cfg.seed, view_index);
  out.mask_labels.assign(static_cast<std::size_t>(out.partition.mask_count), MaskLabel{});
  for (int m = 0; m < out.partition.mask_count; ++m) {
    std::vector<MatchResult> matches;
    for (const Pixel& px : sample_pixels(out.partition, m, cfg.k_samples, view_seed)) {
      ++out.counters.samples;
      const auto f = pixel_feature(grid, px.row + 0.5, px.col + 0.5);
      if (f.zero_norm) {
        ++out.counters.samples_background;
        continue;
      }
      matches.push_back(best_match_over_db(f.vector, db, search, &out.counters.search));
    }
    if (!matches.empty()) out.mask_labels[m] = assign_mask_label(matches, cfg.cutoff);
    if (out.mask_labels[m].label == kNoLabel) ++out.counters.masks_abstained;
    else ++out.counters.masks_labeled;
  }
}

inline std::string view_stage_cache_key(const PipelineConfig& cfg, const std::vector<std::filesystem::path>& view_dirs) {
  ContentHash h;
  h.update("partlift-view-stage-v1");
  for (const char* field : {"k_samples", "cutoff", "coarse_ratio", "window", "seed", "search", "width", "height"}) {
    h.update(cfg.to_json()[field].dump());
  }
  h.update_tree(cfg.database_dir);
  for (const auto& d : view_dirs) {
    h.update(d.filename().string());
    h.update_file(d / layout::kMasks);
    h.update_file(d / layout::kFeatures);
    auto side = d / layout::kFeatures;
    h.update_file(side.replace_extension(".json"));
  }
  return h.hex();
}

}  // namespace detail

/// Runs every stage in memory. Throws ValidationError on bad inputs.
inline PipelineResult run_pipeline_in_memory(const PipelineConfig& cfg) {
  cfg.validate();
  PipelineResult res;
  detail::StageClock clock(res.timings_ms);

  const LabeledDatabase db = layout::load_database(cfg.database_dir, cfg.coarse_ratio);
  res.vocabulary = db.vocabulary;
  if (std::filesystem::exists(cfg.views_dir / layout::kVocabulary)) {
    if (!(PartVocabulary::load(cfg.views_dir / layout::kVocabulary) == db.vocabulary)) {
      throw ValidationError((cfg.views_dir / layout::kVocabulary).string() +
                            ": vocabulary differs from the database vocabulary");
    }
  }
  res.cloud = layout::load_cloud(cfg.views_dir);
  try {
    res.cloud.validate(db.vocabulary.size());
  } catch (const ValidationError& e) {
    throw ValidationError((cfg.views_dir / layout::kCloud).string() + ": " + e.what());
  }
  auto view_dirs = layout::subdirectories(cfg.views_dir);
  if (view_dirs.size() < static_cast<std::size_t>(cfg.views)) {
    throw ValidationError(cfg.views_dir.string() + ": found " + std::to_string(view_dirs.size()) +
                          " view directories, config 'views' requires " + std::to_string(cfg.views));
  }
  view_dirs.resize(static_cast<std::size_t>(cfg.views));
  std::vector<CameraModel> cameras;
  for (const auto& d : view_dirs) {
    for (const char* f : {layout::kCamera, layout::kMasks, layout::kFeatures}) layout::require_file(d / f);
    auto cam = CameraModel::load(d / layout::kCamera);
    if (cam.width != cfg.width || cam.height != cfg.height) {
      throw ValidationError((d / layout::kCamera).string() + ": camera is " + std::to_string(cam.width) + "x" +
                            std::to_string(cam.height) + ", config expects " + std::to_string(cfg.width) + "x" +
                            std::to_string(cfg.height));
    }
    cameras.push_back(cam);
  }
  clock.lap("load");

  res.views.resize(view_dirs.size());
  for (std::size_t v = 0; v < view_dirs.size(); ++v) res.views[v].name = view_dirs[v].filename().string();
  parallel_for(view_dirs.size(), cfg.threads, [&](std::size_t v) {
    res.views[v].map = detail::view_pixel_map(view_dirs[v], res.cloud, cameras[v], cfg);
  });
  clock.lap("rasterize");

  std::optional<std::string> cache_key;
  std::optional<nlohmann::json> cached;
  if (!cfg.cache_dir.empty()) {
    cache_key = detail::view_stage_cache_key(cfg, view_dirs);
    cached = cache_lookup(cfg.cache_dir, *cache_key);
  }
  if (cached) {
    res.counters.cache_hit = true;
    const auto& entries = (*cached)["views"];
    for (std::size_t v = 0; v < view_dirs.size(); ++v) {
      auto& out = res.views[v];
      std::size_t empty = 0;
      const auto proposals = proposals_from_tensor(load_tensor(view_dirs[v] / layout::kMasks), &empty);
      out.partition = build_nonoverlapping(cfg.height, cfg.width, proposals);
      const auto& e = entries.at(v);
      const auto labels = e.at("labels").get<std::vector<LabelId>>();
      const auto conf = e.at("confidences").get<std::vector<double>>();
      if (labels.size() != static_cast<std::size_t>(out.partition.mask_count)) {
        throw ValidationError("cache entry " + *cache_key + " does not match view " + out.name);
      }
      for (std::size_t m = 0; m < labels.size(); ++m) out.mask_labels.push_back({labels[m], conf[m]});
      out.counters = PipelineCounters::from_view_stage_json(e.at("counters"));
    }
  } else {
    parallel_for(view_dirs.size(), cfg.threads,
                 [&](std::size_t v) { detail::label_view_masks(view_dirs[v], v, db, cfg, res.views[v]); });
    if (cache_key) {
      nlohmann::json entries = nlohmann::json::array();
      for (const auto& view : res.views) {
        std::vector<LabelId> labels;
        std::vector<double> conf;
        for (const auto& ml : view.mask_labels) {
          labels.push_back(ml.label);
          conf.push_back(ml.confidence);
        }
        entries.push_back({{"labels", labels}, {"confidences", conf}, {"counters", view.counters.view_stage_json()}});
      }
      cache_store(cfg.cache_dir, *cache_key, {{"views", entries}});
    }
  }
  for (const auto& view : res.views) res.counters.add_view(view.counters);
  clock.lap("mask_labels");

  std::vector<ViewMasks> graph_input;
  for (const auto& view : res.views) graph_input.push_back({&view.partition, &view.map, view.mask_labels});
  res.graph = build_graph(graph_input, static_cast<std::uint32_t>(cfg.min_shared_points), cfg.threads);
  res.discarded = detect_undersegmented(res.graph, static_cast<std::size_t>(cfg.conflict_tolerance));
  const auto final_labels = aggregate_labels(res.graph, res.discarded, {cfg.cutoff, cfg.graph_depth, cfg.threads});
  for (std::size_t v = 0; v < res.views.size(); ++v) {
    const auto begin = final_labels.begin() + static_cast<std::ptrdiff_t>(res.graph.view_offset[v]);
    res.views[v].final_mask_labels.assign(begin, begin + res.views[v].partition.mask_count);
  }
  clock.lap("consistency");

  std::vector<std::vector<LabelId>> rasters(res.views.size());
  std::vector<LabeledPixels> lifted;
  for (std::size_t v = 0; v < res.views.size(); ++v) rasters[v] = res.pixel_labels(v);
  for (std::size_t v = 0; v < res.views.size(); ++v) lifted.push_back({&res.views[v].map, rasters[v]});
  res.point_labels = backproject_labels(lifted, res.cloud.size(), cfg.cutoff, cfg.threads);
  clock.lap("backproject");

  if (res.cloud.gt_labels) {
    const auto parts = all_parts(res.vocabulary);
    res.standard = object_report(res.point_labels, *res.cloud.gt_labels, parts, MetricMode::kStandard);
    res.partnete = object_report(res.point_labels, *res.cloud.gt_labels, parts, MetricMode::kPartNetE);
  }
  clock.lap("evaluate");

  res.counters.views = res.views.size();
  res.counters.points = res.cloud.size();
  res.counters.database_images = db.images.size();
  res.counters.graph_vertices = res.graph.vertices.size();
  res.counters.graph_edges = res.graph.edge_count();
  res.counters.discarded_vertices = static_cast<std::uint64_t>(std::count(res.discarded.begin(), res.discarded.end(), true));
  res.counters.points_labeled = static_cast<std::uint64_t>(
      std::count_if(res.point_labels.begin(), res.point_labels.end(), [](LabelId l) { return l != kNoLabel; }));
  res.counters.points_unlabeled = res.cloud.size() - res.counters.points_labeled;
  return res;
}

inline constexpr const char* kOutputLabels = "labels.tbt";
inline constexpr const char* kOutputMetrics = "metrics.json";
inline constexpr const char* kOutputPly = "labels.ply";
inline constexpr const char* kOutputGraph = "graph.json";

/// Runs the pipeline and writes labels.tbt, metrics.json, labels.ply and,
/// with debug_graph, graph.json into the output directory. Files are staged
/// in a scratch directory and only moved into place once all of them exist.
inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  const fs::path staging = cfg.output_dir / ".partial";
  fs::remove_all(staging);
  try {
    auto res = run_pipeline_in_memory(cfg);
    fs::create_directories(staging);
    save_tensor(labels_tensor(res.point_labels), staging / kOutputLabels);
    {
      std::ofstream out(staging / kOutputMetrics, std::ios::trunc);
      out << res.metrics_json(cfg.metric).dump(2) << '\n';
      if (!out) throw IoError("cannot write " + (staging / kOutputMetrics).string(), 0);
    }
    {
      std::ofstream out(staging / kOutputPly, std::ios::binary | std::ios::trunc);
      out << export_ply(res.cloud, res.point_labels);
      if (!out) throw IoError("cannot write " + (staging / kOutputPly).string(), 0);
    }
    std::vector<const char*> outputs = {kOutputLabels, kOutputMetrics, kOutputPly};
    if (cfg.debug_graph) {
      std::vector<LabelId> finals;
      for (const auto& v : res.views) finals.insert(finals.end(), v.final_mask_labels.begin(), v.final_mask_labels.end());
      std::ofstream out(staging / kOutputGraph, std::ios::trunc);
      out << graph_to_json(res.graph, res.discarded, finals).dump(1) << '\n';
      outputs.push_back(kOutputGraph);
    }
    for (const char* f : outputs) fs::rename(staging / f, cfg.output_dir / f);
    fs::remove_all(staging);
    return res;
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
}

}  // namespace partlift
