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

#include <array>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "partlift/core/vocabulary.hpp"
#include "partlift/geometry/point_cloud.hpp"

namespace partlift {

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kUnlabeledColor = {128, 128, 128};

/// 20-entry qualitative palette; labels wrap around it.
inline const std::vector<Rgb>& default_colormap() {
  static const std::vector<Rgb> kPalette = {
      {31, 119, 180}, {255, 127, 14}, {44, 160, 44},   {214, 39, 40},   {148, 103, 189},
      {140, 86, 75},  {227, 119, 194}, {188, 189, 34}, {23, 190, 207},  {174, 199, 232},
      {255, 187, 120}, {152, 223, 138}, {255, 152, 150}, {197, 176, 213}, {196, 156, 148},
      {247, 182, 210}, {219, 219, 141}, {158, 218, 229}, {57, 59, 121},   {99, 121, 57}};
  return kPalette;
}

/// ASCII PLY with per-vertex x y z red green blue; label -1 is gray.
inline std::string export_ply(const PointCloud& cloud, std::span<const LabelId> labels,
                              const std::vector<Rgb>& colormap = default_colormap()) {
  if (labels.size() != cloud.size()) {
    throw ValidationError("export_ply: " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(cloud.size()) + " points");
  }
  if (colormap.empty()) throw ValidationError("export_ply: empty colormap");
  std::ostringstream out;
  out << "ply\nformat ascii 1.0\n"
      << "element vertex " << cloud.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "end_header\n";
  out.precision(9);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.positions[i];
    const Rgb c = labels[i] < 0 ? kUnlabeledColor : colormap[static_cast<std::size_t>(labels[i]) % colormap.size()];
    out << p[0] << ' ' << p[1] << ' ' << p[2] << ' ' << int(c[0]) << ' ' << int(c[1]) << ' ' << int(c[2]) << '\n';
  }
  return out.str();
}

}  // namespace partlift
