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

// Turns overlapping class-agnostic mask proposals into a partition: proposals
// are stacked largest first, smaller ones on top, and each keeps only what is
// still visible.

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "partlift/core/error.hpp"
#include "partlift/core/tensor.hpp"

namespace partlift {

struct Pixel {
  int row = 0;
  int col = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

struct MaskProposal {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> raster;  // H*W, nonzero = inside
  std::size_t area = 0;
  std::size_t source_order = 0;

  static MaskProposal from_raster(int height, int width, std::vector<std::uint8_t> raster,
                                  std::size_t source_order) {
    MaskProposal p{height, width, std::move(raster), 0, source_order};
    if (p.raster.size() != static_cast<std::size_t>(height) * width) {
      throw ValidationError("mask proposal raster size does not match its resolution");
    }
    p.area = static_cast<std::size_t>(std::count_if(p.raster.begin(), p.raster.end(),
                                                    [](std::uint8_t v) { return v != 0; }));
    return p;
  }
};

struct MaskPartition {
  int height = 0;
  int width = 0;
  std::vector<std::int32_t> id_map;  // H*W, -1 = unassigned
  int mask_count = 0;
  /// source_order of the proposal each mask id came from.
  std::vector<std::size_t> source;

  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(height) * width; }

  std::vector<std::size_t> areas() const {
    std::vector<std::size_t> a(mask_count, 0);
    for (auto id : id_map) if (id >= 0) ++a[id];
    return a;
  }

  /// Row-major pixel list of one mask.
  std::vector<Pixel> pixels_of(int mask_id) const {
    if (mask_id < 0 || mask_id >= mask_count) {
      throw ValidationError("mask id " + std::to_string(mask_id) + " outside [0, " +
                            std::to_string(mask_count) + ")");
    }
    std::vector<Pixel> out;
    for (std::size_t p = 0; p < id_map.size(); ++p) {
      if (id_map[p] == mask_id) out.push_back({static_cast<int>(p / width), static_cast<int>(p % width)});
    }
    return out;
  }

  /// The partition's masks as proposals, source_order = mask id.
  std::vector<MaskProposal> to_proposals() const {
    std::vector<MaskProposal> out;
    for (int m = 0; m < mask_count; ++m) {
      std::vector<std::uint8_t> r(pixel_count(), 0);
      for (std::size_t p = 0; p < id_map.size(); ++p) r[p] = id_map[p] == m ? 1 : 0;
      out.push_back(MaskProposal::from_raster(height, width, std::move(r), static_cast<std::size_t>(m)));
    }
    return out;
  }

  Tensor to_tensor() const {
    return Tensor::from<std::int32_t>({static_cast<std::uint32_t>(height), static_cast<std::uint32_t>(width)},
                                      id_map);
  }
};

/// Each pixel ends up in the smallest-area proposal covering it (equal areas:
/// the higher source_order is painted later and wins). Proposals left with no
/// visible pixel vanish. Surviving segments get ids ordered by descending
/// visible area, ties by paint order, which makes the operation idempotent.
inline MaskPartition build_nonoverlapping(int height, int width, std::span<const MaskProposal> proposals) {
  if (height < 0 || width < 0) throw ValidationError("build_nonoverlapping: negative resolution");
  const std::size_t n_pix = static_cast<std::size_t>(height) * width;
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    const auto& p = proposals[i];
    if (p.height != height || p.width != width || p.raster.size() != n_pix) {
      throw ValidationError("mask proposal " + std::to_string(i) + " is " + std::to_string(p.height) + "x" +
                            std::to_string(p.width) + ", expected " + std::to_string(height) + "x" +
                            std::to_string(width));
    }
  }

  std::vector<std::size_t> order(proposals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (proposals[a].area != proposals[b].area) return proposals[a].area > proposals[b].area;
    return proposals[a].source_order < proposals[b].source_order;
  });

  std::vector<std::int32_t> painted(n_pix, -1);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const auto& raster = proposals[order[rank]].raster;
    for (std::size_t p = 0; p < n_pix; ++p) {
      if (raster[p]) painted[p] = static_cast<std::int32_t>(rank);
    }
  }

  std::vector<std::size_t> visible(order.size(), 0);
  for (auto r : painted) if (r >= 0) ++visible[r];
  std::vector<std::size_t> survivors;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (visible[rank] > 0) survivors.push_back(rank);
  }
  std::stable_sort(survivors.begin(), survivors.end(),
                   [&](std::size_t a, std::size_t b) { return visible[a] > visible[b]; });

  std::vector<std::int32_t> rank_to_id(order.size(), -1);
  MaskPartition out;
  out.height = height;
  out.width = width;
  out.mask_count = static_cast<int>(survivors.size());
  for (std::size_t id = 0; id < survivors.size(); ++id) {
    rank_to_id[survivors[id]] = static_cast<std::int32_t>(id);
    out.source.push_back(proposals[order[survivors[id]]].source_order);
  }
  out.id_map.resize(n_pix);
  for (std::size_t p = 0; p < n_pix; ++p) out.id_map[p] = painted[p] >= 0 ? rank_to_id[painted[p]] : -1;
  return out;
}

/// Decodes a u8 [M, H, W] proposal stack. All-zero rasters are skipped and
/// counted in `dropped`.
inline std::vector<MaskProposal> proposals_from_tensor(const Tensor& t, std::size_t* dropped = nullptr) {
  expect_tensor(t, DType::kU8, 3, "mask proposals");
  const int m = static_cast<int>(t.dim(0));
  const int h = static_cast<int>(t.dim(1));
  const int w = static_cast<int>(t.dim(2));
  const auto flat = t.values<std::uint8_t>();
  const std::size_t n_pix = static_cast<std::size_t>(h) * w;
  std::vector<MaskProposal> out;
  std::size_t skipped = 0;
  for (int i = 0; i < m; ++i) {
    std::vector<std::uint8_t> r(flat.begin() + static_cast<std::ptrdiff_t>(i * n_pix),
                                flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * n_pix));
    auto p = MaskProposal::from_raster(h, w, std::move(r), static_cast<std::size_t>(i));
    if (p.area == 0) {
      ++skipped;
      continue;
    }
    out.push_back(std::move(p));
  }
  if (dropped) *dropped = skipped;
  return out;
}

inline Tensor proposals_to_tensor(int height, int width, std::span<const MaskProposal> proposals) {
  const std::size_t n_pix = static_cast<std::size_t>(height) * width;
  std::vector<std::uint8_t> flat;
  flat.reserve(proposals.size() * n_pix);
  for (const auto& p : proposals) {
    for (auto v : p.raster) flat.push_back(v ? 1 : 0);
  }
  return Tensor::from<std::uint8_t>({static_cast<std::uint32_t>(proposals.size()),
                                     static_cast<std::uint32_t>(height), static_cast<std::uint32_t>(width)},
                                    flat);
}

}  // namespace partlift
