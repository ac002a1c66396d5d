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

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "partlift/core/random.hpp"
#include "partlift/masks2d/labeling.hpp"
#include "partlift/masks2d/partition.hpp"

namespace partlift {
namespace {

MaskProposal rect(int h, int w, int r0, int r1, int c0, int c1, std::size_t order) {
  std::vector<std::uint8_t> r(static_cast<std::size_t>(h) * w, 0);
  for (int y = r0; y < r1; ++y)
    for (int x = c0; x < c1; ++x) r[y * w + x] = 1;
  return MaskProposal::from_raster(h, w, std::move(r), order);
}

std::vector<MaskProposal> random_proposals(Rng& rng, int h, int w, int count) {
  std::vector<MaskProposal> out;
  for (int i = 0; i < count; ++i) {
    const int r0 = static_cast<int>(rng.below(h)), c0 = static_cast<int>(rng.below(w));
    const int r1 = r0 + 1 + static_cast<int>(rng.below(h - r0));
    const int c1 = c0 + 1 + static_cast<int>(rng.below(w - c0));
    auto p = rect(h, w, r0, r1, c0, c1, static_cast<std::size_t>(i));
    // Punch random holes so shapes are not only rectangles.
    for (auto& v : p.raster) if (v && rng.below(5) == 0) v = 0;
    p = MaskProposal::from_raster(h, w, std::move(p.raster), static_cast<std::size_t>(i));
    if (p.area > 0) out.push_back(std::move(p));
  }
  return out;
}

// Per-pixel oracle: source_order of the smallest covering proposal; equal
// areas resolve to the later source_order. -1 where nothing covers.
std::vector<long> smallest_cover(const std::vector<MaskProposal>& props, std::size_t n_pix) {
  std::vector<long> owner(n_pix, -1);
  for (std::size_t p = 0; p < n_pix; ++p) {
    const MaskProposal* best = nullptr;
    for (const auto& m : props) {
      if (!m.raster[p]) continue;
      if (!best || m.area < best->area || (m.area == best->area && m.source_order > best->source_order)) best = &m;
    }
    if (best) owner[p] = static_cast<long>(best->source_order);
  }
  return owner;
}

void expect_partition_laws(const MaskPartition& part, const std::vector<MaskProposal>& props) {
  const auto owner = smallest_cover(props, part.pixel_count());
  std::set<std::int32_t> ids;
  for (std::size_t p = 0; p < part.pixel_count(); ++p) {
    const auto id = part.id_map[p];
    if (owner[p] < 0) {
      ASSERT_EQ(id, -1) << "pixel " << p;
      continue;
    }
    ASSERT_GE(id, 0) << "pixel " << p;
    ASSERT_EQ(static_cast<long>(part.source[id]), owner[p]) << "pixel " << p;
    ids.insert(id);
  }
  ASSERT_EQ(static_cast<int>(ids.size()), part.mask_count);
  if (!ids.empty()) {
    EXPECT_EQ(*ids.begin(), 0);
    EXPECT_EQ(*ids.rbegin(), part.mask_count - 1);
  }
}

TEST(PartitionTest, NestedMasksSplit) {
  const std::vector<MaskProposal> props = {rect(6, 6, 1, 3, 1, 3, 0), rect(6, 6, 0, 5, 0, 5, 1)};
  const auto part = build_nonoverlapping(6, 6, props);
  ASSERT_EQ(part.mask_count, 2);
  const auto areas = part.areas();
  EXPECT_EQ(areas[0], 21u);  // B minus A
  EXPECT_EQ(areas[1], 4u);   // A
  EXPECT_EQ(part.source[1], 0u);
  EXPECT_EQ(part.id_map[1 * 6 + 1], 1);
  EXPECT_EQ(part.id_map[0], 0);
  EXPECT_EQ(part.id_map[5 * 6 + 5], -1);
}

TEST(PartitionTest, DuplicateMaskIsFullyOccluded) {
  const std::vector<MaskProposal> props = {rect(4, 4, 0, 2, 0, 2, 0), rect(4, 4, 0, 2, 0, 2, 1)};
  const auto part = build_nonoverlapping(4, 4, props);
  EXPECT_EQ(part.mask_count, 1);
  EXPECT_EQ(part.source[0], 1u);
}

TEST(PartitionTest, EmptyInputGivesEmptyPartition) {
  const auto part = build_nonoverlapping(3, 5, {});
  EXPECT_EQ(part.mask_count, 0);
  for (auto id : part.id_map) EXPECT_EQ(id, -1);
}

TEST(PartitionTest, RandomProposalsMatchSmallestCoverOracle) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto props = random_proposals(rng, 12, 15, 1 + static_cast<int>(rng.below(6)));
    const auto part = build_nonoverlapping(12, 15, props);
    expect_partition_laws(part, props);
    if (HasFatalFailure()) return;
  }
}

TEST(PartitionTest, Idempotent) {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const auto props = random_proposals(rng, 10, 10, 5);
    const auto once = build_nonoverlapping(10, 10, props);
    const auto again = build_nonoverlapping(10, 10, once.to_proposals());
    EXPECT_EQ(again.id_map, once.id_map);
    EXPECT_EQ(again.mask_count, once.mask_count);
  }
}

TEST(PartitionTest, InputOrderOnlyMattersThroughSourceOrder) {
  Rng rng(14);
  auto props = random_proposals(rng, 9, 9, 6);
  const auto base = build_nonoverlapping(9, 9, props);
  std::reverse(props.begin(), props.end());
  EXPECT_EQ(build_nonoverlapping(9, 9, props).id_map, base.id_map);
}

TEST(PartitionTest, TensorRoundTripDropsEmptyMasks) {
  std::vector<MaskProposal> props = {rect(3, 3, 0, 1, 0, 3, 0), rect(3, 3, 1, 3, 0, 1, 1)};
  props.push_back(MaskProposal::from_raster(3, 3, std::vector<std::uint8_t>(9, 0), 2));
  const auto t = proposals_to_tensor(3, 3, props);
  std::size_t dropped = 0;
  const auto back = proposals_from_tensor(t, &dropped);
  EXPECT_EQ(dropped, 1u);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].raster, props[1].raster);
}

MaskPartition single_mask(int area) {
  MaskPartition part;
  part.height = 1;
  part.width = area;
  part.id_map.assign(area, 0);
  part.mask_count = 1;
  part.source = {0};
  return part;
}

TEST(SamplingTest, ClampsToMaskArea) {
  const auto px = sample_pixels(single_mask(5), 0, 20, 1);
  EXPECT_EQ(px.size(), 5u);
  EXPECT_THROW(sample_pixels(single_mask(5), 1, 3, 1), ValidationError);
  EXPECT_THROW(sample_pixels(single_mask(5), 0, 0, 1), ValidationError);
}

TEST(SamplingTest, DeterministicAndDistinct) {
  const auto part = single_mask(300);
  const auto a = sample_pixels(part, 0, 20, 99);
  EXPECT_EQ(a, sample_pixels(part, 0, 20, 99));
  EXPECT_NE(a, sample_pixels(part, 0, 20, 100));
  std::set<int> cols;
  for (const auto& p : a) cols.insert(p.col);
  EXPECT_EQ(cols.size(), 20u);
}

TEST(SamplingTest, InclusionFrequencyWithinBinomialBounds) {
  const auto part = single_mask(100);
  std::vector<int> hits(100, 0);
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    for (const auto& p : sample_pixels(part, 0, 10, static_cast<std::uint64_t>(t))) ++hits[p.col];
  }
  const double sigma = std::sqrt(trials * 0.1 * 0.9);
  for (int h : hits) EXPECT_LE(std::abs(h - trials * 0.1), 3.0 * sigma + 1e-9);
}

std::vector<MatchResult> matches(std::initializer_list<std::pair<LabelId, double>> v) {
  std::vector<MatchResult> out;
  for (const auto& [l, s] : v) out.push_back({0, 0, 0, s, l});
  return out;
}

TEST(MaskLabelTest, DocumentedExamples) {
  constexpr LabelId A = 0, B = 1;
  auto m = assign_mask_label(matches({{A, 0.9}, {A, 0.8}}));
  EXPECT_EQ(m.label, A);
  EXPECT_DOUBLE_EQ(m.confidence, 1.0);
  m = assign_mask_label(matches({{A, 0.9}, {B, 0.85}}));
  EXPECT_EQ(m.label, kNoLabel);
  EXPECT_EQ(m.confidence, 0.0);
  m = assign_mask_label(matches({{A, 0.9}, {A, 0.9}, {B, 0.3}}));
  EXPECT_EQ(m.label, A);
  EXPECT_NEAR(m.confidence, 1.8 / 2.1, 1e-12);
}

TEST(MaskLabelTest, NegativeScoresAndUnlabeledCellsCarryNoWeight) {
  auto m = assign_mask_label(matches({{0, 0.5}, {1, -0.9}, {kNoLabel, 0.99}}));
  EXPECT_EQ(m.label, 0);
  EXPECT_DOUBLE_EQ(m.confidence, 1.0);
  m = assign_mask_label(matches({{0, -0.2}, {kNoLabel, 0.9}}));
  EXPECT_EQ(m.label, kNoLabel);
  EXPECT_THROW(assign_mask_label({}), ValidationError);
}

TEST(MaskLabelTest, InvariantToOrderAndRelabeling) {
  Rng rng(15);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<MatchResult> ms;
    for (int i = 0; i < 12; ++i) ms.push_back({0, 0, 0, rng.uniform(), static_cast<LabelId>(rng.below(3))});
    const auto base = assign_mask_label(ms);
    auto shuffled = ms;
    std::reverse(shuffled.begin(), shuffled.end());
    const auto s = assign_mask_label(shuffled);
    EXPECT_EQ(s.label, base.label);
    EXPECT_EQ(s.confidence, base.confidence);
    for (auto& m : shuffled) m.label = 2 - m.label;
    const auto r = assign_mask_label(shuffled);
    EXPECT_EQ(r.label, base.label == kNoLabel ? kNoLabel : 2 - base.label);
  }
}

}  // namespace
}  // namespace partlift
