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

// Cross-view mask consistency. Vertices are (view, mask) pairs; an edge joins
// two masks of different views that observe enough common 3D points. Masks
// whose neighborhood holds conflicting labels within a single view are
// treated as undersegmented and lose their vote; the remaining masks vote
// over their neighborhoods and every mask takes the label proposed to it most
// often.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "partlift/core/parallel.hpp"
#include "partlift/core/voting.hpp"
#include "partlift/geometry/rasterize.hpp"
#include "partlift/masks2d/labeling.hpp"
#include "partlift/masks2d/partition.hpp"

namespace partlift {

inline constexpr std::uint32_t kDefaultMinSharedPoints = 5;
inline constexpr std::size_t kDefaultConflictTolerance = 0;

struct MaskVertex {
  int view = 0;
  int mask = 0;
  LabelId label = kNoLabel;
  double confidence = 0.0;
};

struct MaskConsistencyGraph {
  std::vector<MaskVertex> vertices;
  /// Sorted neighbor lists.
  std::vector<std::vector<std::size_t>> adjacency;
  /// Shared-point count per edge, keyed (lower id, higher id).
  std::map<std::pair<std::size_t, std::size_t>, std::uint32_t> overlap;
  /// First vertex id of each view.
  std::vector<std::size_t> view_offset;

  std::size_t vertex_id(int view, int mask) const { return view_offset.at(view) + static_cast<std::size_t>(mask); }
  std::size_t edge_count() const noexcept { return overlap.size(); }

  void add_edge(std::size_t a, std::size_t b, std::uint32_t shared) {
    if (a > b) std::swap(a, b);
    adjacency[a].push_back(b);
    adjacency[b].push_back(a);
    overlap[{a, b}] = shared;
  }

  void finalize() {
    for (auto& n : adjacency) std::sort(n.begin(), n.end());
  }

  /// Graph with only vertices; fixtures add edges by hand.
  static MaskConsistencyGraph from_vertices(std::vector<MaskVertex> verts) {
    MaskConsistencyGraph g;
    g.vertices = std::move(verts);
    g.adjacency.resize(g.vertices.size());
    return g;
  }
};

/// One view's input to the graph: its partition, its pixel->point map and
/// the label assigned to each mask.
struct ViewMasks {
  const MaskPartition* partition = nullptr;
  const PixelPointMap* map = nullptr;
  std::span<const MaskLabel> labels;
};

namespace detail {

/// Unique (point, mask) observations of one view, sorted.
inline std::vector<std::pair<std::int32_t, std::int32_t>> point_mask_pairs(const ViewMasks& v) {
  std::vector<std::pair<std::int32_t, std::int32_t>> out;
  for (std::size_t p = 0; p < v.map->indices.size(); ++p) {
    const auto point = v.map->indices[p];
    const auto mask = v.partition->id_map[p];
    if (point >= 0 && mask >= 0) out.emplace_back(point, mask);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace detail

/// Adds an edge between masks of different views iff they observe at least
/// `min_shared` common points.
inline MaskConsistencyGraph build_graph(std::span<const ViewMasks> views,
                                        std::uint32_t min_shared = kDefaultMinSharedPoints,
                                        unsigned threads = 1) {
  if (min_shared < 1) throw ValidationError("build_graph: min shared points must be >= 1");
  MaskConsistencyGraph g;
  for (std::size_t v = 0; v < views.size(); ++v) {
    const auto& vm = views[v];
    if (!vm.partition || !vm.map) throw ValidationError("build_graph: view " + std::to_string(v) + " is incomplete");
    if (vm.partition->height != vm.map->height || vm.partition->width != vm.map->width) {
      throw ValidationError("build_graph: view " + std::to_string(v) + " partition is " +
                            std::to_string(vm.partition->height) + "x" + std::to_string(vm.partition->width) +
                            " but its pixel map is " + std::to_string(vm.map->height) + "x" +
                            std::to_string(vm.map->width));
    }
    if (vm.labels.size() != static_cast<std::size_t>(vm.partition->mask_count)) {
      throw ValidationError("build_graph: view " + std::to_string(v) + " has " + std::to_string(vm.labels.size()) +
                            " mask labels for " + std::to_string(vm.partition->mask_count) + " masks");
    }
    g.view_offset.push_back(g.vertices.size());
    for (int m = 0; m < vm.partition->mask_count; ++m) {
      g.vertices.push_back({static_cast<int>(v), m, vm.labels[m].label, vm.labels[m].confidence});
    }
  }
  g.adjacency.resize(g.vertices.size());

  std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> obs(views.size());
  parallel_for(views.size(), threads, [&](std::size_t v) { obs[v] = detail::point_mask_pairs(views[v]); });

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < views.size(); ++a)
    for (std::size_t b = a + 1; b < views.size(); ++b) pairs.emplace_back(a, b);

  // counts[pair] is a dense Ma x Mb table of shared points.
  std::vector<std::vector<std::uint32_t>> counts(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t k) {
    const auto [a, b] = pairs[k];
    const std::size_t mb = static_cast<std::size_t>(views[b].partition->mask_count);
    auto& table = counts[k];
    table.assign(static_cast<std::size_t>(views[a].partition->mask_count) * mb, 0);
    const auto& oa = obs[a];
    const auto& ob = obs[b];
    std::size_t i = 0, j = 0;
    while (i < oa.size() && j < ob.size()) {
      if (oa[i].first < ob[j].first) { ++i; continue; }
      if (ob[j].first < oa[i].first) { ++j; continue; }
      const auto point = oa[i].first;
      std::size_t i_end = i, j_end = j;
      while (i_end < oa.size() && oa[i_end].first == point) ++i_end;
      while (j_end < ob.size() && ob[j_end].first == point) ++j_end;
      for (std::size_t x = i; x < i_end; ++x)
        for (std::size_t y = j; y < j_end; ++y)
          ++table[static_cast<std::size_t>(oa[x].second) * mb + static_cast<std::size_t>(ob[y].second)];
      i = i_end;
      j = j_end;
    }
  });

  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [a, b] = pairs[k];
    const std::size_t mb = static_cast<std::size_t>(views[b].partition->mask_count);
    for (std::size_t x = 0; x < counts[k].size(); ++x) {
      if (counts[k][x] >= min_shared) {
        g.add_edge(g.view_offset[a] + x / mb, g.view_offset[b] + x % mb, counts[k][x]);
      }
    }
  }
  g.finalize();
  return g;
}

/// Number of unordered pairs in {v} + adj(v) that share a view and carry two
/// different (non -1) labels.
inline std::size_t conflicting_pairs(const MaskConsistencyGraph& g, std::size_t v) {
  std::map<int, std::map<LabelId, std::size_t>> per_view;
  const auto tally = [&](std::size_t u) {
    if (g.vertices[u].label != kNoLabel) ++per_view[g.vertices[u].view][g.vertices[u].label];
  };
  tally(v);
  for (auto u : g.adjacency[v]) tally(u);
  std::size_t pairs = 0;
  for (const auto& [view, labels] : per_view) {
    std::size_t n = 0, same = 0;
    for (const auto& [label, c] : labels) {
      n += c;
      same += c * (c - 1) / 2;
    }
    pairs += n * (n - 1) / 2 - same;
  }
  return pairs;
}

/// discard[v] is true iff the conflict count of v exceeds `tolerance`.
inline std::vector<bool> detect_undersegmented(const MaskConsistencyGraph& g,
                                               std::size_t tolerance = kDefaultConflictTolerance) {
  std::vector<bool> discard(g.vertices.size(), false);
  for (std::size_t v = 0; v < g.vertices.size(); ++v) discard[v] = conflicting_pairs(g, v) > tolerance;
  return discard;
}

/// Vertices within `depth` hops of v (v included), ascending id.
inline std::vector<std::size_t> neighborhood(const MaskConsistencyGraph& g, std::size_t v, int depth) {
  std::vector<std::size_t> frontier = {v};
  std::vector<std::size_t> seen = {v};
  for (int d = 0; d < depth && !frontier.empty(); ++d) {
    std::vector<std::size_t> next;
    for (auto u : frontier) {
      for (auto w : g.adjacency[u]) {
        if (std::find(seen.begin(), seen.end(), w) == seen.end()) {
          seen.push_back(w);
          next.push_back(w);
        }
      }
    }
    frontier = std::move(next);
  }
  std::sort(seen.begin(), seen.end());
  return seen;
}

struct AggregationOptions {
  double cutoff = kDefaultCutoff;
  int depth = 1;
  unsigned threads = 1;
};

/// Two phases. Propose: every kept vertex votes (unit weights, discarded
/// members and -1 labels excluded) over its neighborhood and, on a dominant
/// label, proposes it to every neighborhood member, discarded ones included.
/// Finalize: each vertex takes its most frequent proposal (ties to the lower
/// label id), or keeps its prior label when nothing was proposed.
inline std::vector<LabelId> aggregate_labels(const MaskConsistencyGraph& g, const std::vector<bool>& discard,
                                             const AggregationOptions& opts = {}) {
  const std::size_t n = g.vertices.size();
  if (discard.size() != n) throw ValidationError("aggregate_labels: discard mask size mismatch");
  if (opts.depth < 1) throw ValidationError("aggregate_labels: depth must be >= 1");

  struct Proposal {
    LabelId label = kNoLabel;
    std::vector<std::size_t> members;
  };
  std::vector<Proposal> proposals(n);
  parallel_for(n, opts.threads, [&](std::size_t v) {
    if (discard[v]) return;
    auto members = neighborhood(g, v, opts.depth);
    VoteTally tally(opts.cutoff);
    for (auto u : members) {
      if (!discard[u] && g.vertices[u].label != kNoLabel) tally.add(g.vertices[u].label, 1.0);
    }
    if (tally.empty()) return;
    const auto winner = dominant_label(tally);
    if (!winner) return;
    proposals[v] = {*winner, std::move(members)};
  });

  std::vector<std::map<LabelId, std::size_t>> received(n);
  for (const auto& p : proposals) {
    if (p.label == kNoLabel) continue;
    for (auto u : p.members) ++received[u][p.label];
  }
  std::vector<LabelId> out(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (received[v].empty()) {
      out[v] = g.vertices[v].label;
      continue;
    }
    LabelId best = kNoLabel;
    std::size_t best_count = 0;
    for (const auto& [label, c] : received[v]) {
      if (c > best_count) {
        best = label;
        best_count = c;
      }
    }
    out[v] = best;
  }
  return out;
}

/// Debug dump: vertices with prior/final labels and discard flags, edges with
/// shared-point counts.
inline nlohmann::json graph_to_json(const MaskConsistencyGraph& g, const std::vector<bool>& discard,
                                    const std::vector<LabelId>& final_labels) {
  nlohmann::json verts = nlohmann::json::array();
  for (std::size_t v = 0; v < g.vertices.size(); ++v) {
    const auto& mv = g.vertices[v];
    verts.push_back({{"id", v},
                     {"view", mv.view},
                     {"mask", mv.mask},
                     {"label", mv.label},
                     {"confidence", mv.confidence},
                     {"discarded", v < discard.size() && discard[v]},
                     {"final_label", v < final_labels.size() ? final_labels[v] : kNoLabel}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [key, shared] : g.overlap) edges.push_back({{"a", key.first}, {"b", key.second}, {"overlap", shared}});
  return {{"vertices", verts}, {"edges", edges}};
}

}  // namespace partlift
