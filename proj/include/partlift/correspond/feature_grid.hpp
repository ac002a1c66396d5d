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
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "partlift/core/error.hpp"
#include "partlift/core/tensor.hpp"

namespace partlift {

/// Dense per-view descriptor field at reduced resolution. Cell (r, c) covers
/// image pixels [r*stride, (r+1)*stride) x [c*stride, (c+1)*stride); its
/// center sits at image coordinate ((r+0.5)*stride, (c+0.5)*stride).
class FeatureGrid {
 public:
  static constexpr double kUnitTolerance = 1e-4;

  FeatureGrid() = default;

  FeatureGrid(int rows, int cols, int channels, int stride, std::vector<float> data,
              bool normalized)
      : rows_(rows), cols_(cols), channels_(channels), stride_(stride),
        normalized_(normalized), data_(std::move(data)) {
    if (rows <= 0 || cols <= 0 || channels <= 0) {
      throw ValidationError("feature grid: rows, cols and channels must be positive");
    }
    if (stride < 1) throw ValidationError("feature grid: stride must be >= 1");
    if (data_.size() != cell_count() * static_cast<std::size_t>(channels)) {
      throw ValidationError("feature grid: data size does not match rows*cols*channels");
    }
    norms_.resize(cell_count());
    for (std::size_t i = 0; i < cell_count(); ++i) {
      double s = 0.0;
      for (int ch = 0; ch < channels_; ++ch) {
        const double v = data_[i * channels_ + ch];
        if (!std::isfinite(v)) throw ValidationError("feature grid: non-finite value in cell " + std::to_string(i));
        s += v * v;
      }
      norms_[i] = std::sqrt(s);
      if (normalized_ && norms_[i] > 0.0 && std::abs(norms_[i] - 1.0) >= kUnitTolerance) {
        throw ValidationError("feature grid flagged normalized but cell " + std::to_string(i) +
                              " has norm " + std::to_string(norms_[i]));
      }
    }
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int channels() const noexcept { return channels_; }
  int stride() const noexcept { return stride_; }
  bool normalized() const noexcept { return normalized_; }
  std::size_t cell_count() const noexcept { return static_cast<std::size_t>(rows_) * cols_; }
  std::span<const float> data() const noexcept { return data_; }

  std::span<const float> cell(int row, int col) const {
    return cell(static_cast<std::size_t>(row) * cols_ + col);
  }
  std::span<const float> cell(std::size_t linear) const {
    return {data_.data() + linear * channels_, static_cast<std::size_t>(channels_)};
  }
  double cell_norm(std::size_t linear) const { return norms_[linear]; }
  bool all_zero() const {
    for (double n : norms_) if (n > 0.0) return false;
    return true;
  }

  /// Grid must cover an image of the given size.
  void check_covers(int image_height, int image_width) const {
    if (static_cast<long>(rows_) * stride_ < image_height || static_cast<long>(cols_) * stride_ < image_width) {
      throw ValidationError("feature grid " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                            " at stride " + std::to_string(stride_) + " does not cover a " +
                            std::to_string(image_height) + "x" + std::to_string(image_width) + " image");
    }
  }

  Tensor to_tensor() const {
    return Tensor::from<float>({static_cast<std::uint32_t>(rows_), static_cast<std::uint32_t>(cols_),
                                static_cast<std::uint32_t>(channels_)},
                               data_);
  }

  nlohmann::json sidecar() const { return {{"stride", stride_}, {"normalized", normalized_}}; }

  static FeatureGrid from_tensor(const Tensor& t, const nlohmann::json& sidecar) {
    expect_tensor(t, DType::kF32, 3, "feature grid");
    if (!sidecar.is_object() || !sidecar.contains("stride") || !sidecar["stride"].is_number_integer()) {
      throw ParseError("stride", "feature sidecar needs an integer \"stride\"");
    }
    if (!sidecar.contains("normalized") || !sidecar["normalized"].is_boolean()) {
      throw ParseError("normalized", "feature sidecar needs a boolean \"normalized\"");
    }
    for (const auto& [key, value] : sidecar.items()) {
      if (key != "stride" && key != "normalized") throw ParseError(key, "unknown feature sidecar field");
    }
    return FeatureGrid(static_cast<int>(t.dim(0)), static_cast<int>(t.dim(1)), static_cast<int>(t.dim(2)),
                       sidecar["stride"].get<int>(), t.values<float>(), sidecar["normalized"].get<bool>());
  }

  /// `<stem>.tbt` plus `<stem>.json`.
  static FeatureGrid load(const std::filesystem::path& tensor_path) {
    auto side_path = tensor_path;
    side_path.replace_extension(".json");
    std::ifstream in(side_path);
    if (!in) throw ValidationError("cannot open feature sidecar " + side_path.string());
    nlohmann::json side;
    try {
      in >> side;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("json", side_path.string() + ": " + e.what());
    }
    try {
      return from_tensor(load_tensor(tensor_path), side);
    } catch (const ValidationError& e) {
      throw ValidationError(tensor_path.string() + ": " + e.what());
    }
  }

  void save(const std::filesystem::path& tensor_path) const {
    save_tensor(to_tensor(), tensor_path);
    auto side_path = tensor_path;
    side_path.replace_extension(".json");
    std::ofstream out(side_path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + side_path.string() + " for writing", 0);
    out << sidecar().dump() << '\n';
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  int channels_ = 0;
  int stride_ = 1;
  bool normalized_ = false;
  std::vector<float> data_;
  std::vector<double> norms_;
};

/// Average-pools `ratio` x `ratio` blocks of fine cells (partial blocks at
/// the border average what they cover) and re-normalizes nonzero results
/// when the fine grid is normalized.
inline FeatureGrid pool_coarse(const FeatureGrid& fine, int ratio) {
  if (ratio < 1) throw ValidationError("pool_coarse: ratio must be >= 1");
  const int rows = (fine.rows() + ratio - 1) / ratio;
  const int cols = (fine.cols() + ratio - 1) / ratio;
  const int ch = fine.channels();
  std::vector<float> data(static_cast<std::size_t>(rows) * cols * ch);
  std::vector<double> acc(ch);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      std::fill(acc.begin(), acc.end(), 0.0);
      int n = 0;
      for (int fr = r * ratio; fr < std::min((r + 1) * ratio, fine.rows()); ++fr) {
        for (int fc = c * ratio; fc < std::min((c + 1) * ratio, fine.cols()); ++fc) {
          const auto v = fine.cell(fr, fc);
          for (int k = 0; k < ch; ++k) acc[k] += v[k];
          ++n;
        }
      }
      double sq = 0.0;
      for (int k = 0; k < ch; ++k) {
        acc[k] /= n;
        sq += acc[k] * acc[k];
      }
      const double scale = (fine.normalized() && sq > 0.0) ? 1.0 / std::sqrt(sq) : 1.0;
      float* out = data.data() + (static_cast<std::size_t>(r) * cols + c) * ch;
      for (int k = 0; k < ch; ++k) out[k] = static_cast<float>(acc[k] * scale);
    }
  }
  return FeatureGrid(rows, cols, ch, fine.stride() * ratio, std::move(data), fine.normalized());
}

struct PixelFeature {
  std::vector<float> vector;
  /// Interpolant vanished; `vector` is returned as-is (all zeros or nearly).
  bool zero_norm = false;
};

/// Bilinear lookup at image coordinate (y, x); the center of pixel (r, c) is
/// (r + 0.5, c + 0.5). The 4 surrounding cell centers are blended, clamped at
/// the grid border, then re-normalized for normalized grids.
inline PixelFeature pixel_feature(const FeatureGrid& grid, double y, double x) {
  const double extent_y = static_cast<double>(grid.rows()) * grid.stride();
  const double extent_x = static_cast<double>(grid.cols()) * grid.stride();
  if (!(y >= 0.0 && y < extent_y && x >= 0.0 && x < extent_x)) {
    throw BoundsError("pixel_feature: (" + std::to_string(y) + ", " + std::to_string(x) +
                      ") outside the grid's image extent");
  }
  const double gy = std::clamp(y / grid.stride() - 0.5, 0.0, grid.rows() - 1.0);
  const double gx = std::clamp(x / grid.stride() - 0.5, 0.0, grid.cols() - 1.0);
  const int r0 = static_cast<int>(std::floor(gy));
  const int c0 = static_cast<int>(std::floor(gx));
  const int r1 = std::min(r0 + 1, grid.rows() - 1);
  const int c1 = std::min(c0 + 1, grid.cols() - 1);
  const double ty = gy - r0;
  const double tx = gx - c0;

  const int ch = grid.channels();
  std::vector<double> acc(ch, 0.0);
  const auto blend = [&](int r, int c, double w) {
    if (w == 0.0) return;
    const auto v = grid.cell(r, c);
    for (int k = 0; k < ch; ++k) acc[k] += w * v[k];
  };
  blend(r0, c0, (1.0 - ty) * (1.0 - tx));
  blend(r0, c1, (1.0 - ty) * tx);
  blend(r1, c0, ty * (1.0 - tx));
  blend(r1, c1, ty * tx);

  double sq = 0.0;
  for (double a : acc) sq += a * a;
  PixelFeature out;
  out.vector.resize(ch);
  out.zero_norm = sq <= 1e-24;
  const double scale = (grid.normalized() && !out.zero_norm) ? 1.0 / std::sqrt(sq) : 1.0;
  for (int k = 0; k < ch; ++k) out.vector[k] = static_cast<float>(acc[k] * scale);
  return out;
}

}  // namespace partlift
