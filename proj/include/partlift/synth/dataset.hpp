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

#include <filesystem>
#include <string>

#include "partlift/core/random.hpp"
#include "partlift/pipeline/dataset.hpp"
#include "partlift/synth/scene.hpp"

namespace partlift::synth {

struct DatasetOptions {
  int parts = 3;
  int views = 20;
  int database_views = 6;
  int resolution = 256;
  int points = 8000;
  int channels = 32;
  double sigma = 0.0;
  int fine_stride = 2;
  double splat_radius = 1.0;
  std::uint64_t seed = 0;
};

struct DatasetPaths {
  std::filesystem::path database_dir;
  std::filesystem::path views_dir;
};

inline std::string numbered(const char* prefix, int i) {
  std::string n = std::to_string(i);
  return prefix + std::string(n.size() < 3 ? 3 - n.size() : 0, '0') + n;
}

/// Writes a stacked-box scene in the pipeline's input layout: `database/`
/// holds labeled renders from one camera ring, `query/` holds the cloud and
/// the query views from a second, rotated ring.
inline DatasetPaths write_dataset(const std::filesystem::path& root, const DatasetOptions& opts) {
  namespace fs = std::filesystem;
  const auto recipe = ShapeRecipe::stacked_boxes(opts.parts);
  SceneOptions so;
  so.points = opts.points;
  so.views = opts.views;
  so.resolution = opts.resolution;
  so.channels = opts.channels;
  so.noise_sigma = opts.sigma;
  const SynthScene scene = make_scene(recipe, so, opts.seed);
  so.views = opts.database_views;
  so.ring_phase = 1.0;
  const SynthScene db_scene = make_scene(recipe, so, opts.seed);
  const auto& gt = *scene.cloud.gt_labels;
  const int n_labels = static_cast<int>(scene.vocabulary.size());

  DatasetPaths paths{root / "database", root / "query"};
  fs::create_directories(paths.database_dir);
  fs::create_directories(paths.views_dir);
  scene.vocabulary.save(paths.database_dir / layout::kVocabulary);
  scene.vocabulary.save(paths.views_dir / layout::kVocabulary);
  layout::save_cloud(paths.views_dir, scene.cloud);

  for (int i = 0; i < opts.database_views; ++i) {
    const auto map = project_points(db_scene.cloud, db_scene.cameras[i], opts.splat_radius);
    const auto grid = make_feature_grid(map, gt, scene.part_embeddings, opts.sigma, opts.fine_stride,
                                        mix_seed(opts.seed, 5000 + static_cast<std::uint64_t>(i)));
    layout::save_database_image(paths.database_dir / numbered("img_", i), grid,
                                cell_majority_labels(map, gt, opts.fine_stride, n_labels));
  }

  for (int v = 0; v < opts.views; ++v) {
    const fs::path dir = paths.views_dir / numbered("view_", v);
    fs::create_directories(dir);
    const auto& cam = scene.cameras[v];
    cam.save(dir / layout::kCamera);
    const auto map = project_points(scene.cloud, cam, opts.splat_radius);
    const auto [idx, depth] = map.to_tensors();
    save_tensor(idx, dir / layout::kIndices);
    save_tensor(depth, dir / layout::kDepth);
    const auto proposals = make_proposals(map, gt, n_labels);
    save_tensor(proposals_to_tensor(map.height, map.width, proposals), dir / layout::kMasks);
    make_feature_grid(map, gt, scene.part_embeddings, opts.sigma, opts.fine_stride,
                      mix_seed(opts.seed, 1000 + static_cast<std::uint64_t>(v)))
        .save(dir / layout::kFeatures);
  }
  return paths;
}

}  // namespace partlift::synth
