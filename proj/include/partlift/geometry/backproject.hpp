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

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "partlift/core/parallel.hpp"
#include "partlift/core/voting.hpp"
#include "partlift/geometry/rasterize.hpp"

namespace partlift {

/// One view's pixel->point map with its final per-pixel 2D labels.
struct LabeledPixels {
  const PixelPointMap* map = nullptr;
  std::span<const LabelId> labels;
};

/// Lifts per-pixel labels to the cloud: every (view, pixel) whose map entry is
/// point i and whose label is not -1 casts one unit vote for point i. Points
/// without votes or without a dominant label get -1.
inline std::vector<LabelId> backproject_labels(std::span<const LabeledPixels> views,
                                               std::size_t n_points,
                                               double cutoff = kDefaultCutoff,
                                               unsigned threads = 1) {
  LabelId max_label = kNoLabel;
  for (std::size_t v = 0; v < views.size(); ++v) {
    const auto& view = views[v];
    if (view.map == nullptr) throw ValidationError("backproject: view " + std::to_string(v) + " has no pixel map");
    if (view.labels.size() != view.map->pixel_count()) {
      throw ValidationError("backproject: view " + std::to_string(v) + " label raster has " +
                            std::to_string(view.labels.size()) + " pixels, map has " +
                            std::to_string(view.map->pixel_count()));
    }
    for (std::size_t p = 0; p < view.labels.size(); ++p) {
      const std::int32_t idx = view.map->indices[p];
      if (idx >= 0 && static_cast<std::size_t>(idx) >= n_points) {
        throw BoundsError("backproject: view " + std::to_string(v) + " references point " +
                          std::to_string(idx) + " but the cloud has " + std::to_string(n_points));
      }
      if (idx >= 0) max_label = std::max(max_label, view.labels[p]);
    }
  }
  std::vector<LabelId> out(n_points, kNoLabel);
  if (max_label < 0) return out;

  // Unit votes are integers, so dense counts are exact and order-free.
  const std::size_t n_labels = static_cast<std::size_t>(max_label) + 1;
  std::vector<std::uint32_t> counts(n_points * n_labels, 0);
  for (const auto& view : views) {
    for (std::size_t p = 0; p < view.labels.size(); ++p) {
      const std::int32_t idx = view.map->indices[p];
      const LabelId label = view.labels[p];
      if (idx < 0 || label < 0) continue;
      ++counts[static_cast<std::size_t>(idx) * n_labels + static_cast<std::size_t>(label)];
    }
  }
  parallel_for(n_points, threads, [&](std::size_t i) {
    VoteTally tally(cutoff);
    bool any = false;
    for (std::size_t l = 0; l < n_labels; ++l) {
      const auto c = counts[i * n_labels + l];
      if (c > 0) {
        tally.add(static_cast<LabelId>(l), static_cast<double>(c));
        any = true;
      }
    }
    if (any) out[i] = dominant_label(tally).value_or(kNoLabel);
  });
  return out;
}

}  // namespace partlift
