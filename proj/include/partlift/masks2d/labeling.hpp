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
#include <utility>
#include <vector>

#include "partlift/core/random.hpp"
#include "partlift/core/voting.hpp"
#include "partlift/correspond/match.hpp"
#include "partlift/masks2d/partition.hpp"

namespace partlift {

inline constexpr int kDefaultSamplesPerMask = 20;

/// min(k, area) pixels of one mask, uniformly without replacement. The draw
/// depends only on (seed, mask_id) and the mask's pixel set.
inline std::vector<Pixel> sample_pixels(const MaskPartition& partition, int mask_id, int k,
                                        std::uint64_t seed) {
  if (k < 1) throw ValidationError("sample_pixels: k must be >= 1");
  auto pixels = partition.pixels_of(mask_id);
  if (static_cast<std::size_t>(k) >= pixels.size()) return pixels;
  Rng rng(seed, static_cast<std::uint64_t>(mask_id));
  // Partial Fisher-Yates: the first k slots are a uniform k-subset.
  for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pixels.size() - i));
    std::swap(pixels[i], pixels[j]);
  }
  pixels.resize(static_cast<std::size_t>(k));
  return pixels;
}

struct MaskLabel {
  LabelId label = kNoLabel;
  double confidence = 0.0;
};

/// Confidence-weighted vote over the transferred labels of a mask's sampled
/// pixels. Each match adds max(score, 0) to its label; matches landing on
/// unlabeled database cells carry no evidence.
inline MaskLabel assign_mask_label(std::span<const MatchResult> matches, double cutoff = kDefaultCutoff) {
  if (matches.empty()) throw ValidationError("assign_mask_label: no matches");
  // Sorted accumulation keeps the float sums independent of match order.
  std::vector<std::pair<LabelId, double>> votes;
  votes.reserve(matches.size());
  for (const auto& m : matches) {
    if (m.label != kNoLabel) votes.emplace_back(m.label, std::max(m.score, 0.0));
  }
  std::sort(votes.begin(), votes.end());
  VoteTally tally(cutoff);
  for (const auto& [label, w] : votes) tally.add(label, w);
  if (!(tally.total() > 0.0)) return {};
  const auto outcome = resolve_vote(tally);
  if (!outcome.label) return {};
  return {*outcome.label, outcome.confidence};
}

}  // namespace partlift
