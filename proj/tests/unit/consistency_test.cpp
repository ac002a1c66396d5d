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

#include <set>

#include "partlift/consistency/graph.hpp"
#include "partlift/core/random.hpp"

namespace partlift {
namespace {

constexpr LabelId kSeat = 0;
constexpr LabelId kBack = 1;

// Undersegmentation fixture: v1 in view 0 spans seat and back; v2 (seat) and
// v3 (back) in view 1; v4 (seat) and v5 (back) in view 2. Ids are 0-based.
MaskConsistencyGraph seat_back_fixture() {
  auto g = MaskConsistencyGraph::from_vertices({{0, 0, kSeat, 1.0},
                                                {1, 0, kSeat, 1.0},
                                                {1, 1, kBack, 1.0},
                                                {2, 0, kSeat, 1.0},
                                                {2, 1, kBack, 1.0}});
  g.add_edge(0, 1, 10);
  g.add_edge(0, 2, 10);
  g.add_edge(1, 3, 10);
  g.add_edge(2, 4, 10);
  g.finalize();
  return g;
}

TEST(UndersegmentationTest, SeatBackFixtureDiscardsOnlyTheSpanningMask) {
  const auto g = seat_back_fixture();
  EXPECT_EQ(conflicting_pairs(g, 0), 1u);
  EXPECT_EQ(detect_undersegmented(g, 0), (std::vector<bool>{true, false, false, false, false}));
  EXPECT_EQ(detect_undersegmented(g, 1), std::vector<bool>(5, false));
  EXPECT_EQ(detect_undersegmented(g, 7), std::vector<bool>(5, false));
}

TEST(AggregationTest, SeatBackFixtureFinalLabels) {
  const auto g = seat_back_fixture();
  const auto finals = aggregate_labels(g, detect_undersegmented(g, 0));
  EXPECT_EQ(finals[1], kSeat);
  EXPECT_EQ(finals[3], kSeat);
  EXPECT_EQ(finals[2], kBack);
  EXPECT_EQ(finals[4], kBack);
  // v1 gets one seat and one back proposal; the tie goes to the lower id.
  EXPECT_EQ(finals[0], kSeat);
}

TEST(AggregationTest, UnanimousChainIsFixedPoint) {
  auto g = MaskConsistencyGraph::from_vertices({{0, 0, 2, 1}, {1, 0, 2, 1}, {2, 0, 2, 1}});
  g.add_edge(0, 1, 5);
  g.add_edge(1, 2, 5);
  g.finalize();
  EXPECT_EQ(aggregate_labels(g, detect_undersegmented(g)), (std::vector<LabelId>{2, 2, 2}));
}

TEST(AggregationTest, SingleMislabeledViewFlips) {
  constexpr LabelId A = 0, B = 1;
  std::vector<MaskVertex> verts;
  for (int v = 0; v < 5; ++v) verts.push_back({v, 0, v == 2 ? B : A, 1.0});
  auto g = MaskConsistencyGraph::from_vertices(verts);
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = a + 1; b < 5; ++b) g.add_edge(a, b, 50);
  g.finalize();
  const auto discard = detect_undersegmented(g);
  EXPECT_EQ(discard, std::vector<bool>(5, false));
  EXPECT_EQ(aggregate_labels(g, discard), std::vector<LabelId>(5, A));
}

TEST(AggregationTest, NoEdgesKeepsPriorLabels) {
  const auto g = MaskConsistencyGraph::from_vertices({{0, 0, 3, 1}, {0, 1, kNoLabel, 0}, {1, 0, 1, 1}});
  EXPECT_EQ(aggregate_labels(g, detect_undersegmented(g)), (std::vector<LabelId>{3, kNoLabel, 1}));
}

TEST(AggregationTest, DiscardedVertexStillReceivesLabel) {
  auto g = seat_back_fixture();
  // Give v1's neighborhood only seat votes on one side: drop the back edge.
  g = MaskConsistencyGraph::from_vertices(g.vertices);
  g.vertices[0].label = kBack;
  g.add_edge(0, 1, 10);
  g.add_edge(1, 3, 10);
  g.finalize();
  std::vector<bool> discard = {true, false, false, false, false};
  const auto finals = aggregate_labels(g, discard);
  EXPECT_EQ(finals[0], kSeat);
}

TEST(AggregationTest, DeepNeighborhoods) {
  auto g = MaskConsistencyGraph::from_vertices({{0, 0, 0, 1}, {1, 0, 0, 1}, {2, 0, 1, 1}, {3, 0, 1, 1}});
  g.add_edge(0, 1, 5);
  g.add_edge(1, 2, 5);
  g.add_edge(2, 3, 5);
  g.finalize();
  EXPECT_EQ(neighborhood(g, 0, 1), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(neighborhood(g, 0, 2), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(neighborhood(g, 0, 9), (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_THROW(aggregate_labels(g, std::vector<bool>(4, false), {0.6, 0, 1}), ValidationError);
}

// Random labeled graph with edges only across views.
MaskConsistencyGraph random_graph(Rng& rng, int views, int masks_per_view, int labels) {
  std::vector<MaskVertex> verts;
  for (int v = 0; v < views; ++v)
    for (int m = 0; m < masks_per_view; ++m)
      verts.push_back({v, m, static_cast<LabelId>(rng.below(labels + 1)) - 1, 1.0});
  auto g = MaskConsistencyGraph::from_vertices(verts);
  for (std::size_t a = 0; a < verts.size(); ++a)
    for (std::size_t b = a + 1; b < verts.size(); ++b)
      if (verts[a].view != verts[b].view && rng.below(3) == 0) g.add_edge(a, b, 5);
  g.finalize();
  return g;
}

TEST(UndersegmentationTest, MatchesPairEnumerationOracle) {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = random_graph(rng, 4, 4, 3);
    for (std::size_t v = 0; v < g.vertices.size(); ++v) {
      std::vector<std::size_t> members = {v};
      members.insert(members.end(), g.adjacency[v].begin(), g.adjacency[v].end());
      std::size_t pairs = 0;
      for (std::size_t i = 0; i < members.size(); ++i) {
        for (std::size_t j = i + 1; j < members.size(); ++j) {
          const auto& a = g.vertices[members[i]];
          const auto& b = g.vertices[members[j]];
          if (a.view == b.view && a.label != kNoLabel && b.label != kNoLabel && a.label != b.label) ++pairs;
        }
      }
      EXPECT_EQ(conflicting_pairs(g, v), pairs);
    }
  }
}

TEST(AggregationTest, ThreadCountDoesNotChangeResult) {
  Rng rng(32);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = random_graph(rng, 5, 5, 3);
    const auto discard = detect_undersegmented(g, 1);
    EXPECT_EQ(aggregate_labels(g, discard, {0.6, 1, 1}), aggregate_labels(g, discard, {0.6, 1, 4}));
  }
}

struct ViewData {
  PixelPointMap map;
  MaskPartition partition;
  std::vector<MaskLabel> labels;
};

ViewData random_view(Rng& rng, int h, int w, int n_points, int n_masks) {
  ViewData d{PixelPointMap::background(w, h), {}, {}};
  d.partition.height = h;
  d.partition.width = w;
  d.partition.mask_count = n_masks;
  d.partition.id_map.assign(static_cast<std::size_t>(h) * w, -1);
  for (std::size_t p = 0; p < d.map.pixel_count(); ++p) {
    if (rng.below(6) != 0) {
      d.map.indices[p] = static_cast<std::int32_t>(rng.below(n_points));
      d.map.depth[p] = 1.0f;
    }
    // Masks are vertical stripes so each holds a contiguous block of columns.
    d.partition.id_map[p] = static_cast<std::int32_t>((p % w) * n_masks / w);
  }
  d.labels.assign(n_masks, {0, 1.0});
  return d;
}

TEST(BuildGraphTest, ThresholdIsInclusive) {
  // Two 1x10 views observing the same points 0..9 with one mask each.
  ViewData a{PixelPointMap::background(10, 1), {}, {{0, 1.0}}};
  a.partition = {1, 10, std::vector<std::int32_t>(10, 0), 1, {0}};
  for (int i = 0; i < 10; ++i) {
    a.map.indices[i] = i;
    a.map.depth[i] = 1.0f;
  }
  ViewData b = a;
  std::vector<ViewMasks> views = {{&a.partition, &a.map, a.labels}, {&b.partition, &b.map, b.labels}};
  auto g = build_graph(views, 5);
  EXPECT_EQ(g.edge_count(), 1u);
  EXPECT_EQ(g.overlap.at({0, 1}), 10u);
  // Keep only 4 shared points.
  for (int i = 4; i < 10; ++i) b.map.indices[i] = 100 + i;
  g = build_graph(views, 5);
  EXPECT_EQ(g.edge_count(), 0u);
  g = build_graph(views, 4);
  EXPECT_EQ(g.edge_count(), 1u);
}

TEST(BuildGraphTest, ResolutionMismatchNamesView) {
  Rng rng(33);
  auto a = random_view(rng, 4, 4, 10, 2);
  auto b = random_view(rng, 4, 5, 10, 2);
  std::vector<ViewMasks> views = {{&a.partition, &a.map, a.labels}, {&b.partition, &b.map, b.labels}};
  b.partition.width = 4;
  try {
    build_graph(views);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("view 1"), std::string::npos) << e.what();
  }
}

TEST(BuildGraphTest, AdjacencyMatchesAllPairsOracle) {
  Rng rng(34);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<ViewData> data;
    for (int v = 0; v < 3; ++v) data.push_back(random_view(rng, 12, 12, 80, 2 + static_cast<int>(rng.below(4))));
    std::vector<ViewMasks> views;
    for (const auto& d : data) views.push_back({&d.partition, &d.map, d.labels});
    const auto g = build_graph(views, 5, 3);
    const auto points_of = [&](int view, int mask) {
      std::set<std::int32_t> s;
      for (std::size_t p = 0; p < data[view].map.pixel_count(); ++p)
        if (data[view].partition.id_map[p] == mask && data[view].map.indices[p] >= 0) s.insert(data[view].map.indices[p]);
      return s;
    };
    std::size_t expected_edges = 0;
    for (std::size_t a = 0; a < g.vertices.size(); ++a) {
      for (std::size_t b = a + 1; b < g.vertices.size(); ++b) {
        const auto& va = g.vertices[a];
        const auto& vb = g.vertices[b];
        const bool linked = std::binary_search(g.adjacency[a].begin(), g.adjacency[a].end(), b);
        if (va.view == vb.view) {
          EXPECT_FALSE(linked);
          continue;
        }
        const auto pa = points_of(va.view, va.mask), pb = points_of(vb.view, vb.mask);
        std::size_t shared = 0;
        for (auto p : pa) shared += pb.count(p);
        EXPECT_EQ(linked, shared >= 5);
        if (shared >= 5) {
          ++expected_edges;
          EXPECT_EQ(g.overlap.at({a, b}), shared);
          EXPECT_TRUE(std::binary_search(g.adjacency[b].begin(), g.adjacency[b].end(), a));
        }
      }
    }
    EXPECT_EQ(g.edge_count(), expected_edges);
  }
}

TEST(GraphJsonTest, DumpsVerticesAndEdges) {
  const auto g = seat_back_fixture();
  const auto discard = detect_undersegmented(g);
  const auto j = graph_to_json(g, discard, aggregate_labels(g, discard));
  EXPECT_EQ(j["vertices"].size(), 5u);
  EXPECT_EQ(j["edges"].size(), 4u);
  EXPECT_TRUE(j["vertices"][0]["discarded"].get<bool>());
}

}  // namespace
}  // namespace partlift
