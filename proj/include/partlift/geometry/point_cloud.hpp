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
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "partlift/core/tensor.hpp"
#include "partlift/core/vocabulary.hpp"
#include "partlift/geometry/camera.hpp"

namespace partlift {

/// Query object: N world-space positions with optional ground-truth part ids.
struct PointCloud {
  std::vector<std::array<float, 3>> positions;
  std::optional<std::vector<LabelId>> gt_labels;

  std::size_t size() const noexcept { return positions.size(); }

  Vec3 position(std::size_t i) const {
    const auto& p = positions[i];
    return {p[0], p[1], p[2]};
  }

  /// `vocabulary_size` 0 skips the label-range check.
  void validate(std::size_t vocabulary_size = 0) const {
    if (positions.empty()) throw ValidationError("point cloud is empty");
    for (std::size_t i = 0; i < positions.size(); ++i) {
      for (float c : positions[i]) {
        if (!std::isfinite(c)) throw ValidationError("point " + std::to_string(i) + " has a non-finite coordinate");
      }
    }
    if (gt_labels) {
      if (gt_labels->size() != positions.size()) {
        throw ValidationError("gt_labels length " + std::to_string(gt_labels->size()) +
                              " != point count " + std::to_string(positions.size()));
      }
      for (LabelId l : *gt_labels) {
        if (l < kNoLabel || (vocabulary_size > 0 && l >= static_cast<LabelId>(vocabulary_size))) {
          throw ValidationError("gt label " + std::to_string(l) + " outside vocabulary");
        }
      }
    }
  }

  Tensor positions_tensor() const {
    std::vector<float> flat;
    flat.reserve(positions.size() * 3);
    for (const auto& p : positions) flat.insert(flat.end(), p.begin(), p.end());
    return Tensor::from<float>({static_cast<std::uint32_t>(positions.size()), 3}, flat);
  }

  static std::vector<std::array<float, 3>> positions_from(const Tensor& t) {
    expect_tensor(t, DType::kF32, 2, "point positions");
    if (t.dim(1) != 3) throw ValidationError("point positions: expected shape [N, 3]");
    const auto flat = t.values<float>();
    std::vector<std::array<float, 3>> out(t.dim(0));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = {flat[3 * i], flat[3 * i + 1], flat[3 * i + 2]};
    return out;
  }
};

inline Tensor labels_tensor(std::span<const LabelId> labels) {
  return Tensor::from<std::int32_t>({static_cast<std::uint32_t>(labels.size())}, labels);
}

inline std::vector<LabelId> labels_from(const Tensor& t, const std::string& what) {
  expect_tensor(t, DType::kI32, 1, what);
  return t.values<std::int32_t>();
}

}  // namespace partlift
