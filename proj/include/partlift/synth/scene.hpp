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

// Deterministic synthetic scenes: labeled point clouds built from
// axis-aligned primitives, a ring of cameras, and part-keyed feature grids.
// Every random draw flows from the scene seed.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "partlift/core/random.hpp"
#include "partlift/core/vocabulary.hpp"
#include "partlift/correspond/feature_grid.hpp"
#include "partlift/geometry/camera.hpp"
#include "partlift/geometry/point_cloud.hpp"
#include "partlift/geometry/rasterize.hpp"
#include "partlift/masks2d/partition.hpp"

namespace partlift::synth {

struct Primitive {
  enum class Kind { kBox, kSphere };
  Kind kind = Kind::kBox;
  Vec3 center{0, 0, 0};
  Vec3 half{0.5, 0.5, 0.5};  // box half extents; sphere uses half[0] as radius

  double surface_area() const {
    if (kind == Kind::kSphere) return 4.0 * std::numbers::pi * half[0] * half[0];
    return 8.0 * (half[0] * half[1] + half[1] * half[2] + half[0] * half[2]);
  }

  /// Closed containment with a small tolerance; surface points of touching
  /// primitives count as covered.
  bool covers(const Vec3& p, double tol = 1e-9) const {
    if (kind == Kind::kSphere) return norm(p - center) <= half[0] + tol;
    for (int a = 0; a < 3; ++a) {
      if (std::abs(p[a] - center[a]) > half[a] + tol) return false;
    }
    return true;
  }

  Vec3 sample_surface(Rng& rng) const {
    if (kind == Kind::kSphere) {
      Vec3 d{rng.normal(), rng.normal(), rng.normal()};
      while (norm(d) < 1e-12) d = {rng.normal(), rng.normal(), rng.normal()};
      return center + half[0] * normalized(d);
    }
    // Face pairs weighted by area: axis a is the face normal.
    const std::array<double, 3> face = {half[1] * half[2], half[0] * half[2], half[0] * half[1]};
    const double pick = rng.uniform() * (face[0] + face[1] + face[2]);
    const int axis = pick < face[0] ? 0 : (pick < face[0] + face[1] ? 1 : 2);
    Vec3 p;
    for (int a = 0; a < 3; ++a) p[a] = center[a] + (2.0 * rng.uniform() - 1.0) * half[a];
    p[axis] = center[axis] + (rng.uniform() < 0.5 ? -half[axis] : half[axis]);
    return p;
  }
};

/// One primitive per part; part i gets label i.
struct ShapeRecipe {
  std::vector<Primitive> parts;

  void validate() const {
    if (parts.empty()) throw ValidationError("shape recipe has no parts");
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const auto& p = parts[i];
      const bool flat = p.kind == Primitive::Kind::kSphere ? !(p.half[0] > 0.0)
                                                           : !(p.half[0] > 0.0 && p.half[1] > 0.0 && p.half[2] > 0.0);
      if (flat) throw ValidationError("shape recipe part " + std::to_string(i) + " has zero volume");
    }
  }

  /// `n` unit-footprint boxes stacked along +z with heights cycling through
  /// 1.0, 0.5, 0.75 (dyadic, so shared faces coincide exactly).
  static ShapeRecipe stacked_boxes(int n) {
    if (n < 1) throw ValidationError("stacked_boxes: need at least one part");
    static constexpr double kHeights[] = {1.0, 0.5, 0.75};
    ShapeRecipe r;
    double z = 0.0;
    for (int i = 0; i < n; ++i) {
      const double h = kHeights[i % 3];
      r.parts.push_back({Primitive::Kind::kBox, {0.0, 0.0, z + h / 2}, {0.5, 0.5, h / 2}});
      z += h;
    }
    return r;
  }

  /// Surface area of part i not covered by any other part, for stacked
  /// boxes built by stacked_boxes().
  static double stacked_exposed_area(int n, int i) {
    static constexpr double kHeights[] = {1.0, 0.5, 0.75};
    const double h = kHeights[i % 3];
    double area = 4.0 * 1.0 * h;  // sides
    if (i == 0) area += 1.0;
    if (i == n - 1) area += 1.0;
    return area;
  }
};

struct SynthScene {
  PointCloud cloud;
  PartVocabulary vocabulary;
  std::vector<CameraModel> cameras;
  std::vector<std::vector<float>> part_embeddings;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

struct SceneOptions {
  int points = 8000;
  int views = 20;
  int resolution = 256;
  int channels = 32;
  double noise_sigma = 0.0;
  /// Fraction of the image the object's bounding sphere spans.
  double fill = 0.8;
  /// Rotates the camera ring so database renders differ from query renders.
  double ring_phase = 0.0;
};

inline constexpr double kMaxEmbeddingCosine = 0.5;

/// Random unit vectors, redrawn until every pair has cosine <= 0.5.
inline std::vector<std::vector<float>> make_embeddings(int count, int channels, Rng& rng) {
  if (channels < 2) throw ValidationError("embeddings need at least 2 channels");
  std::vector<std::vector<float>> out;
  int attempts = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++attempts > 100000) throw ValidationError("cannot draw dissimilar embeddings; raise channels");
    std::vector<double> v(channels);
    double sq = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      sq += x * x;
    }
    std::vector<float> e(channels);
    for (int k = 0; k < channels; ++k) e[k] = static_cast<float>(v[k] / std::sqrt(sq));
    bool ok = true;
    for (const auto& o : out) {
      double d = 0.0;
      for (int k = 0; k < channels; ++k) d += static_cast<double>(e[k]) * o[k];
      if (d > kMaxEmbeddingCosine) ok = false;
    }
    if (ok) out.push_back(std::move(e));
  }
  return out;
}

/// K cameras on a Fibonacci sphere around `target`, all looking at it.
inline std::vector<CameraModel> camera_ring(int count, const Vec3& target, double bound_radius, int resolution,
                                            double fill, double phase) {
  if (count < 1) throw ValidationError("camera ring needs at least one view");
  const double distance = 3.0 * bound_radius;
  // Bounding sphere subtends asin(R/d); map it to `fill` of the half-width.
  const double half_angle = std::asin(bound_radius / distance);
  const double focal = fill * (resolution / 2.0) / std::tan(half_angle);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<CameraModel> cams;
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double theta = golden * i + phase;
    const Vec3 dir{r * std::cos(theta), r * std::sin(theta), z};
    cams.push_back(CameraModel::look_at(target + distance * dir, target, {0, 0, 1}, focal, resolution, resolution));
  }
  return cams;
}

/// Samples `opts.points` surface points over the parts' exposed surfaces
/// (area-weighted, rejecting samples covered by another part) and places the
/// camera ring around the centroid.
inline SynthScene make_scene(const ShapeRecipe& recipe, const SceneOptions& opts, std::uint64_t seed) {
  recipe.validate();
  if (opts.views < 1) throw ValidationError("make_scene: views must be >= 1");
  if (opts.points < 1) throw ValidationError("make_scene: points must be >= 1");
  SynthScene scene;
  scene.seed = seed;
  scene.noise_sigma = opts.noise_sigma;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < recipe.parts.size(); ++i) names.push_back("part_" + std::to_string(i));
  scene.vocabulary = PartVocabulary(std::move(names));

  Rng rng(seed, 1);
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& p : recipe.parts) cumulative.push_back(total += p.surface_area());

  std::vector<LabelId> labels;
  std::vector<std::size_t> accepted(recipe.parts.size(), 0);
  std::size_t tries = 0;
  while (scene.cloud.positions.size() < static_cast<std::size_t>(opts.points)) {
    if (++tries > 1000ull * opts.points) throw ValidationError("make_scene: recipe has almost no exposed surface");
    const double pick = rng.uniform() * total;
    std::size_t part = 0;
    while (part + 1 < cumulative.size() && pick >= cumulative[part]) ++part;
    const Vec3 p = recipe.parts[part].sample_surface(rng);
    bool hidden = false;
    for (std::size_t o = 0; o < recipe.parts.size() && !hidden; ++o) {
      if (o != part && recipe.parts[o].covers(p)) hidden = true;
    }
    if (hidden) continue;
    scene.cloud.positions.push_back({static_cast<float>(p[0]), static_cast<float>(p[1]), static_cast<float>(p[2])});
    labels.push_back(static_cast<LabelId>(part));
    ++accepted[part];
  }
  for (std::size_t i = 0; i < accepted.size(); ++i) {
    if (accepted[i] == 0 && opts.points >= 1000) {
      throw ValidationError("make_scene: part " + std::to_string(i) + " has no exposed surface");
    }
  }
  scene.cloud.gt_labels = std::move(labels);

  Vec3 centroid{0, 0, 0};
  for (std::size_t i = 0; i < scene.cloud.size(); ++i) centroid = centroid + scene.cloud.position(i);
  centroid = (1.0 / scene.cloud.size()) * centroid;
  double bound = 0.0;
  for (std::size_t i = 0; i < scene.cloud.size(); ++i) bound = std::max(bound, norm(scene.cloud.position(i) - centroid));
  scene.cameras = camera_ring(opts.views, centroid, std::max(bound, 1e-3), opts.resolution, opts.fill, opts.ring_phase);

  Rng embed_rng(seed, 2);
  scene.part_embeddings = make_embeddings(static_cast<int>(recipe.parts.size()), opts.channels, embed_rng);
  return scene;
}

/// Majority ground-truth label of the foreground pixels under each cell
/// (ties to the lower label; -1 where the cell sees no labeled point).
inline std::vector<LabelId> cell_majority_labels(const PixelPointMap& view, std::span<const LabelId> gt_labels,
                                                 int stride, int n_labels) {
  const int rows = (view.height + stride - 1) / stride;
  const int cols = (view.width + stride - 1) / stride;
  std::vector<LabelId> out(static_cast<std::size_t>(rows) * cols, kNoLabel);
  std::vector<int> counts(n_labels);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      std::fill(counts.begin(), counts.end(), 0);
      for (int y = r * stride; y < std::min(view.height, (r + 1) * stride); ++y) {
        for (int x = c * stride; x < std::min(view.width, (c + 1) * stride); ++x) {
          const auto idx = view.at(y, x);
          if (idx < 0) continue;
          const LabelId l = gt_labels[static_cast<std::size_t>(idx)];
          if (l >= 0 && l < n_labels) ++counts[l];
        }
      }
      int best = 0;
      for (int l = 1; l < n_labels; ++l) if (counts[l] > counts[best]) best = l;
      if (n_labels > 0 && counts[best] > 0) out[static_cast<std::size_t>(r) * cols + c] = best;
    }
  }
  return out;
}

/// Each foreground cell holds normalize(embedding + noise) for its majority
/// label, where the noise is isotropic Gaussian with per-channel deviation
/// sigma / sqrt(C) (expected norm about sigma). Background cells are zero.
inline FeatureGrid make_feature_grid(const PixelPointMap& view, std::span<const LabelId> gt_labels,
                                     const std::vector<std::vector<float>>& embeddings, double sigma, int stride,
                                     std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ValidationError("make_feature_grid: sigma must be >= 0");
  if (embeddings.empty()) throw ValidationError("make_feature_grid: no embeddings");
  const int ch = static_cast<int>(embeddings.front().size());
  const auto labels = cell_majority_labels(view, gt_labels, stride, static_cast<int>(embeddings.size()));
  const int rows = (view.height + stride - 1) / stride;
  const int cols = (view.width + stride - 1) / stride;
  std::vector<float> data(labels.size() * ch, 0.0f);
  Rng rng(seed);
  const double per_channel = sigma / std::sqrt(static_cast<double>(ch));
  std::vector<double> v(ch);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kNoLabel) continue;
    const auto& e = embeddings[static_cast<std::size_t>(labels[i])];
    float* out = data.data() + i * ch;
    if (sigma == 0.0) {
      std::copy(e.begin(), e.end(), out);
      continue;
    }
    double sq = 0.0;
    for (int k = 0; k < ch; ++k) {
      v[k] = e[k] + per_channel * rng.normal();
      sq += v[k] * v[k];
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (int k = 0; k < ch; ++k) out[k] = static_cast<float>(v[k] * inv);
  }
  return FeatureGrid(rows, cols, ch, stride, std::move(data), true);
}

/// Class-agnostic proposals for one rendered view: one mask per visible part
/// plus the whole-object silhouette, which overlaps all of them.
inline std::vector<MaskProposal> make_proposals(const PixelPointMap& view, std::span<const LabelId> gt_labels,
                                                int n_labels) {
  const std::size_t n_pix = view.pixel_count();
  std::vector<MaskProposal> out;
  std::vector<std::uint8_t> silhouette(n_pix, 0);
  for (std::size_t p = 0; p < n_pix; ++p) silhouette[p] = view.indices[p] >= 0;
  auto whole = MaskProposal::from_raster(view.height, view.width, std::move(silhouette), 0);
  if (whole.area == 0) return out;
  out.push_back(std::move(whole));
  for (int l = 0; l < n_labels; ++l) {
    std::vector<std::uint8_t> r(n_pix, 0);
    for (std::size_t p = 0; p < n_pix; ++p) {
      const auto idx = view.indices[p];
      r[p] = idx >= 0 && gt_labels[static_cast<std::size_t>(idx)] == l;
    }
    auto m = MaskProposal::from_raster(view.height, view.width, std::move(r), out.size());
    if (m.area > 0) out.push_back(std::move(m));
  }
  return out;
}

}  // namespace partlift::synth
