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

// On-disk layout shared by the synthetic generator, the model adapter and the
// pipeline.
//
//   <database_dir>/vocabulary.json
//   <database_dir>/<image>/features.tbt + features.json   f32 [Hf, Wf, C]
//   <database_dir>/<image>/labels.tbt                     i32 [Hf, Wf]
//   <database_dir>/<image>/coarse.tbt + coarse.json       optional
//
//   <views_dir>/cloud.tbt                                 f32 [N, 3]
//   <views_dir>/gt_labels.tbt                             i32 [N], optional
//   <views_dir>/vocabulary.json                           optional
//   <views_dir>/<view>/camera.json
//   <views_dir>/<view>/masks.tbt                          u8 [M, H, W]
//   <views_dir>/<view>/features.tbt + features.json
//   <views_dir>/<view>/indices.tbt + depth.tbt            optional pixel map
//
// Subdirectories are visited in lexicographic order.

#pragma once

#include <algorithm>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "partlift/core/tensor.hpp"
#include "partlift/core/vocabulary.hpp"
#include "partlift/correspond/feature_grid.hpp"
#include "partlift/correspond/match.hpp"
#include "partlift/geometry/point_cloud.hpp"

namespace partlift::layout {

inline constexpr const char* kVocabulary = "vocabulary.json";
inline constexpr const char* kCloud = "cloud.tbt";
inline constexpr const char* kGtLabels = "gt_labels.tbt";
inline constexpr const char* kCamera = "camera.json";
inline constexpr const char* kMasks = "masks.tbt";
inline constexpr const char* kFeatures = "features.tbt";
inline constexpr const char* kCoarse = "coarse.tbt";
inline constexpr const char* kLabels = "labels.tbt";
inline constexpr const char* kIndices = "indices.tbt";
inline constexpr const char* kDepth = "depth.tbt";

inline std::vector<std::filesystem::path> subdirectories(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ValidationError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_directory()) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline void require_file(const std::filesystem::path& p) {
  if (!std::filesystem::is_regular_file(p)) throw ValidationError("missing file " + p.string());
}

/// Loads every database image. Coarse grids come from coarse.tbt when present
/// and are pooled from the fine grid at `coarse_ratio` otherwise.
inline LabeledDatabase load_database(const std::filesystem::path& dir, int coarse_ratio) {
  require_file(dir / kVocabulary);
  LabeledDatabase db;
  db.vocabulary = PartVocabulary::load(dir / kVocabulary);
  for (const auto& sub : subdirectories(dir)) {
    require_file(sub / kFeatures);
    require_file(sub / kLabels);
    DatabaseImage img;
    img.name = sub.filename().string();
    img.fine = FeatureGrid::load(sub / kFeatures);
    const Tensor labels = load_tensor(sub / kLabels);
    expect_tensor(labels, DType::kI32, 2, (sub / kLabels).string());
    if (static_cast<int>(labels.dim(0)) != img.fine.rows() || static_cast<int>(labels.dim(1)) != img.fine.cols()) {
      throw ValidationError((sub / kLabels).string() + ": label raster shape does not match features");
    }
    img.labels = labels.values<std::int32_t>();
    img.coarse = std::filesystem::exists(sub / kCoarse) ? FeatureGrid::load(sub / kCoarse)
                                                        : pool_coarse(img.fine, coarse_ratio);
    img.validate(db.vocabulary);
    db.images.push_back(std::move(img));
  }
  if (db.images.empty()) throw ValidationError("database " + dir.string() + " holds no images");
  return db;
}

inline void save_database_image(const std::filesystem::path& dir, const FeatureGrid& fine,
                                const std::vector<LabelId>& labels) {
  std::filesystem::create_directories(dir);
  fine.save(dir / kFeatures);
  save_tensor(Tensor::from<std::int32_t>({static_cast<std::uint32_t>(fine.rows()),
                                          static_cast<std::uint32_t>(fine.cols())},
                                         labels),
              dir / kLabels);
}

inline PointCloud load_cloud(const std::filesystem::path& views_dir) {
  require_file(views_dir / kCloud);
  PointCloud cloud;
  cloud.positions = PointCloud::positions_from(load_tensor(views_dir / kCloud));
  if (std::filesystem::exists(views_dir / kGtLabels)) {
    cloud.gt_labels = labels_from(load_tensor(views_dir / kGtLabels), (views_dir / kGtLabels).string());
  }
  return cloud;
}

inline void save_cloud(const std::filesystem::path& views_dir, const PointCloud& cloud) {
  std::filesystem::create_directories(views_dir);
  save_tensor(cloud.positions_tensor(), views_dir / kCloud);
  if (cloud.gt_labels) save_tensor(labels_tensor(*cloud.gt_labels), views_dir / kGtLabels);
}

}  // namespace partlift::layout
