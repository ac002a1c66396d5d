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

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "partlift/core/error.hpp"
#include "partlift/core/voting.hpp"
#include "partlift/correspond/match.hpp"
#include "partlift/eval/iou.hpp"

namespace partlift {

/// Every knob of a pipeline run. Defaults follow the method's published
/// settings where one exists (20 views at 800x800, 0.6 voting cutoff).
struct PipelineConfig {
  std::filesystem::path database_dir;
  std::filesystem::path views_dir;
  std::filesystem::path output_dir;
  int views = 20;
  int width = 800;
  int height = 800;
  int k_samples = 20;
  double cutoff = kDefaultCutoff;
  int conflict_tolerance = 0;   // epsilon
  int min_shared_points = 5;    // tau
  int coarse_ratio = 8;
  int window = 3;
  double splat_radius = 1.0;
  int graph_depth = 1;
  std::uint64_t seed = 0;
  MetricMode metric = MetricMode::kStandard;
  SearchMode search = SearchMode::kCoarseToFine;
  unsigned threads = 1;
  bool debug_graph = false;
  std::filesystem::path cache_dir;  // empty = no cache

  void validate() const {
    const auto require = [](bool ok, const std::string& field, const std::string& what) {
      if (!ok) throw ValidationError("config field '" + field + "': " + what);
    };
    require(!database_dir.empty(), "database_dir", "is required");
    require(!views_dir.empty(), "views_dir", "is required");
    require(!output_dir.empty(), "output_dir", "is required");
    require(views >= 1 && views <= 1000, "views", "must be in [1, 1000]");
    require(width >= 1 && width <= 16384, "width", "must be in [1, 16384]");
    require(height >= 1 && height <= 16384, "height", "must be in [1, 16384]");
    require(k_samples >= 1 && k_samples <= 100000, "k_samples", "must be in [1, 100000]");
    require(cutoff > 0.0 && cutoff <= 1.0, "cutoff", "must be in (0, 1]");
    require(conflict_tolerance >= 0, "conflict_tolerance", "must be >= 0");
    require(min_shared_points >= 1, "min_shared_points", "must be >= 1");
    require(coarse_ratio >= 1 && coarse_ratio <= 1024, "coarse_ratio", "must be in [1, 1024]");
    require(window >= 1 && window % 2 == 1, "window", "must be odd and >= 1");
    require(splat_radius >= 0.0 && splat_radius <= 64.0, "splat_radius", "must be in [0, 64]");
    require(graph_depth >= 1 && graph_depth <= 64, "graph_depth", "must be in [1, 64]");
    require(threads <= 1024, "threads", "must be in [0, 1024]");
  }

  nlohmann::json to_json() const {
    return {{"database_dir", database_dir.string()},
            {"views_dir", views_dir.string()},
            {"output_dir", output_dir.string()},
            {"views", views},
            {"width", width},
            {"height", height},
            {"k_samples", k_samples},
            {"cutoff", cutoff},
            {"conflict_tolerance", conflict_tolerance},
            {"min_shared_points", min_shared_points},
            {"coarse_ratio", coarse_ratio},
            {"window", window},
            {"splat_radius", splat_radius},
            {"graph_depth", graph_depth},
            {"seed", seed},
            {"metric", metric_name(metric)},
            {"search", search == SearchMode::kCoarseToFine ? "coarse_to_fine" : "brute_force"},
            {"threads", threads},
            {"debug_graph", debug_graph},
            {"cache_dir", cache_dir.string()}};
  }

  /// Applies the keys present in `j` on top of `*this`. Unknown keys and
  /// wrongly typed values are rejected.
  void merge_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("config document must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      try {
        if (key == "database_dir") database_dir = value.get<std::string>();
        else if (key == "views_dir") views_dir = value.get<std::string>();
        else if (key == "output_dir") output_dir = value.get<std::string>();
        else if (key == "views") views = value.get<int>();
        else if (key == "width") width = value.get<int>();
        else if (key == "height") height = value.get<int>();
        else if (key == "resolution") width = height = value.get<int>();
        else if (key == "k_samples") k_samples = value.get<int>();
        else if (key == "cutoff") cutoff = value.get<double>();
        else if (key == "conflict_tolerance") conflict_tolerance = value.get<int>();
        else if (key == "min_shared_points") min_shared_points = value.get<int>();
        else if (key == "coarse_ratio") coarse_ratio = value.get<int>();
        else if (key == "window") window = value.get<int>();
        else if (key == "splat_radius") splat_radius = value.get<double>();
        else if (key == "graph_depth") graph_depth = value.get<int>();
        else if (key == "seed") seed = value.get<std::uint64_t>();
        else if (key == "metric") metric = parse_metric_mode(value.get<std::string>());
        else if (key == "search") search = parse_search_mode(value.get<std::string>());
        else if (key == "threads") threads = value.get<unsigned>();
        else if (key == "debug_graph") debug_graph = value.get<bool>();
        else if (key == "cache_dir") cache_dir = value.get<std::string>();
        else throw ValidationError("unknown config key '" + key + "'");
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config field '" + key + "': " + e.what());
      }
    }
  }

  static SearchMode parse_search_mode(const std::string& s) {
    if (s == "coarse_to_fine") return SearchMode::kCoarseToFine;
    if (s == "brute_force") return SearchMode::kBruteForce;
    throw ValidationError("unknown search mode '" + s + "' (expected coarse_to_fine or brute_force)");
  }

  static nlohmann::json load_document(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file " + path.string());
    try {
      return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("config file " + path.string() + ": " + e.what());
    }
  }
};

}  // namespace partlift
