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

// Point-cloud rasterization with a z-buffer. The result records, per pixel,
// which 3D point is visible there; it is the only link between 2D predictions
// and the 3D cloud.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <thread>
#include <utility>
#include <vector>

#include "partlift/core/parallel.hpp"
#include "partlift/core/tensor.hpp"
#include "partlift/geometry/camera.hpp"
#include "partlift/geometry/point_cloud.hpp"

namespace partlift {

inline constexpr double kDefaultSplatRadius = 1.0;

struct PixelPointMap {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> indices;  // H*W, -1 for background
  std::vector<float> depth;           // H*W, +inf for background
  /// Set when no point lay in front of the camera.
  bool no_points_in_front = false;

  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width) * height; }
  std::int32_t at(int row, int col) const { return indices[static_cast<std::size_t>(row) * width + col]; }

  static PixelPointMap background(int width, int height) {
    PixelPointMap m;
    m.width = width;
    m.height = height;
    m.indices.assign(m.pixel_count(), -1);
    m.depth.assign(m.pixel_count(), std::numeric_limits<float>::infinity());
    return m;
  }

  /// Checks the index/depth pairing and that every index is below `n_points`.
  void validate(std::size_t n_points) const {
    if (indices.size() != pixel_count() || depth.size() != pixel_count()) {
      throw ValidationError("pixel map buffers do not match its resolution");
    }
    for (std::size_t p = 0; p < indices.size(); ++p) {
      const bool fg = indices[p] >= 0;
      if (fg != std::isfinite(depth[p])) {
        throw ValidationError("pixel map: index/depth disagree at pixel " + std::to_string(p));
      }
      if (indices[p] < -1 || (fg && static_cast<std::size_t>(indices[p]) >= n_points)) {
        throw BoundsError("pixel map: index " + std::to_string(indices[p]) + " at pixel " +
                          std::to_string(p) + " outside [0, " + std::to_string(n_points) + ")");
      }
    }
  }

  std::pair<Tensor, Tensor> to_tensors() const {
    const std::vector<std::uint32_t> shape = {static_cast<std::uint32_t>(height),
                                              static_cast<std::uint32_t>(width)};
    return {Tensor::from<std::int32_t>(shape, indices), Tensor::from<float>(shape, depth)};
  }

  static PixelPointMap from_tensors(const Tensor& idx, const Tensor& dep) {
    expect_tensor(idx, DType::kI32, 2, "pixel map indices");
    expect_tensor(dep, DType::kF32, 2, "pixel map depth");
    if (idx.shape() != dep.shape()) throw ValidationError("pixel map: index and depth shapes differ");
    PixelPointMap m;
    m.height = static_cast<int>(idx.dim(0));
    m.width = static_cast<int>(idx.dim(1));
    m.indices = idx.values<std::int32_t>();
    m.depth = dep.values<float>();
    return m;
  }
};

namespace detail {

struct DepthSlot {
  double depth = std::numeric_limits<double>::infinity();
  std::int32_t index = -1;

  /// Lexicographic (depth, index) minimum; associative and commutative, so
  /// any merge order gives the sequential answer.
  void offer(double d, std::int32_t i) {
    if (d < depth || (d == depth && i < index)) {
      depth = d;
      index = i;
    }
  }
};

inline std::vector<std::pair<int, int>> disk_offsets(double radius) {
  std::vector<std::pair<int, int>> offs;
  const int r = static_cast<int>(std::floor(radius));
  for (int dr = -r; dr <= r; ++dr)
    for (int dc = -r; dc <= r; ++dc)
      if (dr * dr + dc * dc <= radius * radius) offs.emplace_back(dr, dc);
  return offs;
}

inline void splat_range(const PointCloud& cloud, const CameraModel& cam,
                        const std::vector<std::pair<int, int>>& offsets, double reach, std::size_t begin,
                        std::size_t end, std::vector<DepthSlot>& zbuf, bool& any_in_front) {
  for (std::size_t i = begin; i < end; ++i) {
    const Vec3 pc = cam.to_camera(cloud.position(i));
    const auto uv = cam.project(pc);
    if (!uv) continue;
    any_in_front = true;
    const double col_f = std::floor((*uv)[0]);
    const double row_f = std::floor((*uv)[1]);
    // Coarse reject before the integer conversion.
    if (col_f < -reach || row_f < -reach || col_f > cam.width + reach || row_f > cam.height + reach) {
      continue;
    }
    const int col = static_cast<int>(col_f);
    const int row = static_cast<int>(row_f);
    for (const auto& [dr, dc] : offsets) {
      const int r = row + dr;
      const int c = col + dc;
      if (r < 0 || c < 0 || r >= cam.height || c >= cam.width) continue;
      zbuf[static_cast<std::size_t>(r) * cam.width + c].offer(pc[2], static_cast<std::int32_t>(i));
    }
  }
}

}  // namespace detail

/// Splats every point with camera-space z > 0 onto the disk of radius
/// `splat_radius` pixels around its projected pixel. Per pixel the point with
/// minimum depth wins; equal depths go to the lower point index.
inline PixelPointMap project_points(const PointCloud& cloud, const CameraModel& cam,
                                    double splat_radius = kDefaultSplatRadius,
                                    unsigned threads = 1) {
  if (cloud.size() == 0) throw ValidationError("project_points: empty point cloud");
  if (!(splat_radius >= 0.0)) throw ValidationError("project_points: splat radius must be >= 0");
  cam.validate();
  const auto offsets = detail::disk_offsets(splat_radius);
  const std::size_t n_pix = static_cast<std::size_t>(cam.width) * cam.height;

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t chunks = std::min<std::size_t>(threads, (cloud.size() + 4095) / 4096);
  std::vector<std::vector<detail::DepthSlot>> buffers(std::max<std::size_t>(chunks, 1));
  std::vector<char> in_front(buffers.size(), 0);
  parallel_for(buffers.size(), threads, [&](std::size_t k) {
    buffers[k].assign(n_pix, {});
    const std::size_t per = (cloud.size() + buffers.size() - 1) / buffers.size();
    const std::size_t begin = k * per;
    const std::size_t end = std::min(cloud.size(), begin + per);
    bool any = false;
    detail::splat_range(cloud, cam, offsets, std::floor(splat_radius) + 1.0, begin, end, buffers[k], any);
    in_front[k] = any;
  });
  auto& zbuf = buffers[0];
  for (std::size_t k = 1; k < buffers.size(); ++k) {
    for (std::size_t p = 0; p < n_pix; ++p) zbuf[p].offer(buffers[k][p].depth, buffers[k][p].index);
  }

  PixelPointMap map = PixelPointMap::background(cam.width, cam.height);
  for (std::size_t p = 0; p < n_pix; ++p) {
    if (zbuf[p].index >= 0) {
      map.indices[p] = zbuf[p].index;
      map.depth[p] = static_cast<float>(zbuf[p].depth);
    }
  }
  map.no_points_in_front = std::none_of(in_front.begin(), in_front.end(), [](char c) { return c != 0; });
  return map;
}

}  // namespace partlift
