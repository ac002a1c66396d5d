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

// Dense cosine-similarity search over feature grids: the exhaustive reference,
// the windowed coarse-to-fine search, and the argmax over a labeled database.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "partlift/core/error.hpp"
#include "partlift/core/vocabulary.hpp"
#include "partlift/correspond/feature_grid.hpp"

namespace partlift {

struct SearchCounters {
  /// Grid cells scored against a query (zero cells included; they are
  /// visited but can never win).
  std::uint64_t similarity_evaluations = 0;
  std::uint64_t queries = 0;

  SearchCounters& operator+=(const SearchCounters& o) {
    similarity_evaluations += o.similarity_evaluations;
    queries += o.queries;
    return *this;
  }
};

struct GridMatch {
  int row = -1;
  int col = -1;
  double score = -2.0;

  bool found() const noexcept { return row >= 0; }
};

struct CellRect {
  int row_begin, row_end, col_begin, col_end;  // half-open
};

inline double vector_norm(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

namespace detail {

inline double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += static_cast<double>(a[k]) * b[k];
  return s;
}

/// Row-major scan of `rect`; strict improvement keeps the lowest linear index
/// on ties.
inline GridMatch scan(std::span<const float> query, double query_norm, const FeatureGrid& grid,
                      const CellRect& rect, SearchCounters* counters) {
  GridMatch best;
  for (int r = rect.row_begin; r < rect.row_end; ++r) {
    for (int c = rect.col_begin; c < rect.col_end; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * grid.cols() + c;
      const double n = grid.cell_norm(i);
      if (n == 0.0) continue;
      const double s = std::clamp(dot(query, grid.cell(i)) / (query_norm * n), -1.0, 1.0);
      if (s > best.score) best = {r, c, s};
    }
  }
  if (counters) {
    counters->similarity_evaluations +=
        static_cast<std::uint64_t>(rect.row_end - rect.row_begin) * (rect.col_end - rect.col_begin);
  }
  return best;
}

inline double checked_query_norm(std::span<const float> query, const FeatureGrid& grid) {
  if (static_cast<int>(query.size()) != grid.channels()) {
    throw ValidationError("query has " + std::to_string(query.size()) + " channels, grid has " +
                          std::to_string(grid.channels()));
  }
  const double qn = vector_norm(query);
  if (!(qn > 0.0)) throw ValidationError("match: query vector is zero");
  return qn;
}

}  // namespace detail

inline double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  const double na = vector_norm(a);
  const double nb = vector_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(detail::dot(a, b) / (na * nb), -1.0, 1.0);
}

/// Exhaustive argmax of cosine similarity over every nonzero cell.
inline GridMatch brute_force_match(std::span<const float> query, const FeatureGrid& grid,
                                   SearchCounters* counters = nullptr) {
  const double qn = detail::checked_query_norm(query, grid);
  const auto best = detail::scan(query, qn, grid, {0, grid.rows(), 0, grid.cols()}, counters);
  if (!best.found()) throw ValidationError("brute_force_match: grid has no nonzero cell");
  return best;
}

/// Fine cells covered by the `window` x `window` block of coarse cells centered
/// on (coarse_row, coarse_col), truncated at the grid border.
inline CellRect fine_window(int coarse_row, int coarse_col, int window, int ratio,
                            const FeatureGrid& coarse, const FeatureGrid& fine) {
  const int half = window / 2;
  const int r0 = std::max(0, coarse_row - half);
  const int r1 = std::min(coarse.rows() - 1, coarse_row + half);
  const int c0 = std::max(0, coarse_col - half);
  const int c1 = std::min(coarse.cols() - 1, coarse_col + half);
  return {r0 * ratio, std::min(fine.rows(), (r1 + 1) * ratio), c0 * ratio,
          std::min(fine.cols(), (c1 + 1) * ratio)};
}

inline int coarse_ratio(const FeatureGrid& coarse, const FeatureGrid& fine) {
  if (coarse.stride() % fine.stride() != 0) {
    throw ValidationError("coarse stride " + std::to_string(coarse.stride()) +
                          " is not a multiple of fine stride " + std::to_string(fine.stride()));
  }
  const int ratio = coarse.stride() / fine.stride();
  if (coarse.rows() != (fine.rows() + ratio - 1) / ratio || coarse.cols() != (fine.cols() + ratio - 1) / ratio ||
      coarse.channels() != fine.channels()) {
    throw ValidationError("coarse grid shape does not tile the fine grid at ratio " + std::to_string(ratio));
  }
  return ratio;
}

/// Two-level search: argmax on the coarse grid, then an exhaustive search of
/// the fine cells under the window around the coarse winner.
inline GridMatch coarse_to_fine_match(std::span<const float> query, const FeatureGrid& coarse,
                                      const FeatureGrid& fine, int window = 3,
                                      SearchCounters* counters = nullptr) {
  if (window < 1 || window % 2 == 0) throw ValidationError("coarse_to_fine_match: window must be odd and >= 1");
  const int ratio = coarse_ratio(coarse, fine);
  const double qn = detail::checked_query_norm(query, fine);
  const auto c = detail::scan(query, qn, coarse, {0, coarse.rows(), 0, coarse.cols()}, counters);
  if (!c.found()) throw ValidationError("coarse_to_fine_match: coarse grid has no nonzero cell");
  const auto rect = fine_window(c.row, c.col, window, ratio, coarse, fine);
  auto best = detail::scan(query, qn, fine, rect, counters);
  if (!best.found()) {
    // Externally supplied coarse maps can disagree with the fine map's support.
    best = detail::scan(query, qn, fine, {0, fine.rows(), 0, fine.cols()}, counters);
    if (!best.found()) throw ValidationError("coarse_to_fine_match: fine grid has no nonzero cell");
  }
  return best;
}

/// One annotated database image: fine and coarse descriptors plus a part
/// label per fine cell.
struct DatabaseImage {
  std::string name;
  FeatureGrid fine;
  FeatureGrid coarse;
  std::vector<LabelId> labels;  // fine.rows() * fine.cols()

  LabelId label_at(int row, int col) const {
    return labels[static_cast<std::size_t>(row) * fine.cols() + col];
  }

  void validate(const PartVocabulary& vocab) const {
    if (labels.size() != fine.cell_count()) {
      throw ValidationError("database image " + name + ": label raster has " + std::to_string(labels.size()) +
                            " cells, fine grid has " + std::to_string(fine.cell_count()));
    }
    for (LabelId l : labels) {
      if (l != kNoLabel && !vocab.contains(l)) {
        throw ValidationError("database image " + name + ": label " + std::to_string(l) + " outside vocabulary");
      }
    }
    coarse_ratio(coarse, fine);
  }
};

struct LabeledDatabase {
  PartVocabulary vocabulary;
  std::vector<DatabaseImage> images;
};

struct MatchResult {
  int db_image = -1;
  int row = -1;
  int col = -1;
  double score = -2.0;
  LabelId label = kNoLabel;
};

enum class SearchMode { kCoarseToFine, kBruteForce };

struct SearchOptions {
  SearchMode mode = SearchMode::kCoarseToFine;
  int window = 3;
};

/// Best correspondence of `query` across all database images. Images are
/// scanned in id order and only a strictly higher score replaces the
/// incumbent, so exact ties resolve to the lowest image id.
inline MatchResult best_match_over_db(std::span<const float> query, const LabeledDatabase& db,
                                      const SearchOptions& opts = {}, SearchCounters* counters = nullptr) {
  if (db.images.empty()) throw ValidationError("best_match_over_db: database is empty");
  if (counters) ++counters->queries;
  MatchResult best;
  for (std::size_t i = 0; i < db.images.size(); ++i) {
    const auto& img = db.images[i];
    if (img.fine.all_zero()) continue;
    const GridMatch m = opts.mode == SearchMode::kBruteForce
                            ? brute_force_match(query, img.fine, counters)
                            : coarse_to_fine_match(query, img.coarse, img.fine, opts.window, counters);
    if (m.score > best.score) {
      best = {static_cast<int>(i), m.row, m.col, m.score, img.label_at(m.row, m.col)};
    }
  }
  if (best.db_image < 0) throw ValidationError("best_match_over_db: every database image is empty");
  return best;
}

}  // namespace partlift
