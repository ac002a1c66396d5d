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

// Database image preparation: zero the background, crop a square around the
// object's box with a fixed pad, and crop the label raster identically.

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "partlift/core/tensor.hpp"
#include "partlift/core/vocabulary.hpp"

namespace partlift {

/// Half-open pixel box [x0, x1) x [y0, y1).
struct BoundingBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
};

struct PrepareOptions {
  int pad = 16;
  double min_area_fraction = 0.01;
};

struct CropWindow {
  int x = 0, y = 0, width = 0, height = 0;
};

struct PreparedImage {
  Tensor image;                 // u8 [h, w, C]
  std::vector<LabelId> labels;  // h * w, -1 off the object
  CropWindow window;
};

struct PrepareOutcome {
  std::optional<PreparedImage> prepared;
  std::string reject_reason;  // set when `prepared` is empty
};

/// One axis of the crop: a window of `side` pixels centered on [lo, hi),
/// shifted back inside [0, extent) when it sticks out, and truncated to the
/// image only when `side` exceeds `extent`.
inline std::pair<int, int> crop_axis(int lo, int hi, int side, int extent) {
  if (side >= extent) return {0, extent};
  int start = lo + hi - side;
  start = start >= 0 ? start / 2 : -((-start + 1) / 2);
  start = std::clamp(start, 0, extent - side);
  return {start, side};
}

inline CropWindow square_crop(const BoundingBox& box, int image_width, int image_height, int pad) {
  const int side = std::max(box.width(), box.height()) + 2 * pad;
  const auto [x, w] = crop_axis(box.x0, box.x1, side, image_width);
  const auto [y, h] = crop_axis(box.y0, box.y1, side, image_height);
  return {x, y, w, h};
}

inline PrepareOutcome prepare_database_image(const Tensor& image, std::span<const std::uint8_t> object_mask,
                                             std::span<const LabelId> labels, const BoundingBox& box,
                                             const PrepareOptions& opts = {}) {
  expect_tensor(image, DType::kU8, 3, "database image");
  const int h = static_cast<int>(image.dim(0));
  const int w = static_cast<int>(image.dim(1));
  const int ch = static_cast<int>(image.dim(2));
  const std::size_t n_pix = static_cast<std::size_t>(h) * w;
  if (object_mask.size() != n_pix || labels.size() != n_pix) {
    throw ValidationError("prepare_database_image: mask and label raster must match the image resolution");
  }
  if (box.x0 < 0 || box.y0 < 0 || box.x1 > w || box.y1 > h || box.width() <= 0 || box.height() <= 0) {
    throw ValidationError("prepare_database_image: bbox [" + std::to_string(box.x0) + "," + std::to_string(box.y0) +
                          "," + std::to_string(box.x1) + "," + std::to_string(box.y1) + ") outside the " +
                          std::to_string(w) + "x" + std::to_string(h) + " image");
  }
  const auto area = static_cast<std::size_t>(std::count_if(object_mask.begin(), object_mask.end(),
                                                           [](std::uint8_t v) { return v != 0; }));
  if (static_cast<double>(area) < opts.min_area_fraction * static_cast<double>(n_pix)) {
    return {std::nullopt, "too small"};
  }

  const CropWindow win = square_crop(box, w, h, opts.pad);
  const auto src = image.values<std::uint8_t>();
  std::vector<std::uint8_t> dst(static_cast<std::size_t>(win.width) * win.height * ch, 0);
  std::vector<LabelId> out_labels(static_cast<std::size_t>(win.width) * win.height, kNoLabel);
  for (int y = 0; y < win.height; ++y) {
    for (int x = 0; x < win.width; ++x) {
      const std::size_t s = static_cast<std::size_t>(y + win.y) * w + (x + win.x);
      if (!object_mask[s]) continue;
      const std::size_t d = static_cast<std::size_t>(y) * win.width + x;
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(s * ch), ch, dst.begin() + static_cast<std::ptrdiff_t>(d * ch));
      out_labels[d] = labels[s];
    }
  }
  PreparedImage prepared{Tensor::from<std::uint8_t>({static_cast<std::uint32_t>(win.height),
                                                     static_cast<std::uint32_t>(win.width),
                                                     static_cast<std::uint32_t>(ch)},
                                                    dst),
                         std::move(out_labels), win};
  return {std::move(prepared), {}};
}

}  // namespace partlift
