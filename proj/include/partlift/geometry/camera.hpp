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
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "partlift/core/error.hpp"

namespace partlift {

using Vec3 = std::array<double, 3>;

inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(const Vec3& a) { return (1.0 / norm(a)) * a; }

/// Row-major 4x4 rigid transform.
using Mat4 = std::array<double, 16>;

inline Mat4 identity4() { return {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1}; }

inline Mat4 matmul(const Mat4& a, const Mat4& b) {
  Mat4 c{};
  for (int r = 0; r < 4; ++r)
    for (int k = 0; k < 4; ++k)
      for (int col = 0; col < 4; ++col) c[r * 4 + col] += a[r * 4 + k] * b[k * 4 + col];
  return c;
}

inline Vec3 transform_point(const Mat4& m, const Vec3& p) {
  return {m[0] * p[0] + m[1] * p[1] + m[2] * p[2] + m[3],
          m[4] * p[0] + m[5] * p[1] + m[6] * p[2] + m[7],
          m[8] * p[0] + m[9] * p[1] + m[10] * p[2] + m[11]};
}

/// Inverse of a rigid transform [R | t] -> [R^T | -R^T t].
inline Mat4 rigid_inverse(const Mat4& m) {
  Mat4 inv = identity4();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) inv[r * 4 + c] = m[c * 4 + r];
  for (int r = 0; r < 3; ++r) {
    inv[r * 4 + 3] = -(inv[r * 4 + 0] * m[3] + inv[r * 4 + 1] * m[7] + inv[r * 4 + 2] * m[11]);
  }
  return inv;
}

/// Pinhole camera. Camera space is right-handed with x right, y down and the
/// optical axis along +z. Pixel (row, col) covers image coordinates
/// [col, col+1) x [row, row+1).
struct CameraModel {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;
  Mat4 world_to_cam = identity4();

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw ValidationError("camera: fx and fy must be positive");
    if (width <= 0 || height <= 0) throw ValidationError("camera: width and height must be positive");
    if (!(cx >= 0.0 && cx < width)) throw ValidationError("camera: cx outside [0, width)");
    if (!(cy >= 0.0 && cy < height)) throw ValidationError("camera: cy outside [0, height)");
    const auto& m = world_to_cam;
    if (m[12] != 0.0 || m[13] != 0.0 || m[14] != 0.0 || m[15] != 1.0) {
      throw ValidationError("camera: world_to_cam bottom row must be [0,0,0,1]");
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double d = 0.0;
        for (int k = 0; k < 3; ++k) d += m[i * 4 + k] * m[j * 4 + k];
        if (std::abs(d - (i == j ? 1.0 : 0.0)) > 1e-6) {
          throw ValidationError("camera: world_to_cam rotation block is not orthonormal");
        }
      }
    }
    for (double v : m) {
      if (!std::isfinite(v)) throw ValidationError("camera: world_to_cam has non-finite entries");
    }
  }

  Vec3 to_camera(const Vec3& world) const { return transform_point(world_to_cam, world); }

  /// Image coordinates (u, v) of a camera-space point with z > 0.
  std::optional<std::array<double, 2>> project(const Vec3& cam) const {
    if (!(cam[2] > 0.0)) return std::nullopt;
    return std::array<double, 2>{fx * cam[0] / cam[2] + cx, fy * cam[1] / cam[2] + cy};
  }

  /// Camera at `eye` looking at `target`; `up` is the world direction that
  /// should appear upward in the image.
  static CameraModel look_at(const Vec3& eye, const Vec3& target, Vec3 up, double focal,
                             int width, int height) {
    const Vec3 forward = normalized(target - eye);
    if (norm(cross(forward, up)) < 1e-9) up = std::abs(forward[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    const Vec3 right = normalized(cross(forward, up));
    const Vec3 down = cross(forward, right);
    CameraModel cam;
    cam.fx = cam.fy = focal;
    cam.width = width;
    cam.height = height;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    const std::array<Vec3, 3> rows = {right, down, forward};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) cam.world_to_cam[r * 4 + c] = rows[r][c];
      cam.world_to_cam[r * 4 + 3] = -dot(rows[r], eye);
    }
    return cam;
  }

  nlohmann::json to_json() const {
    return {{"fx", fx},       {"fy", fy},         {"cx", cx},
            {"cy", cy},       {"width", width},   {"height", height},
            {"world_to_cam", world_to_cam}};
  }

  static CameraModel from_json(const nlohmann::json& j) {
    static constexpr const char* kKeys[] = {"fx", "fy", "cx", "cy", "width", "height", "world_to_cam"};
    if (!j.is_object()) throw ParseError("camera", "expected a JSON object");
    for (const char* key : kKeys) {
      if (!j.contains(key)) throw ParseError(key, "missing camera field");
    }
    for (const auto& [key, value] : j.items()) {
      if (std::find_if(std::begin(kKeys), std::end(kKeys),
                       [&](const char* k) { return key == k; }) == std::end(kKeys)) {
        throw ParseError(key, "unknown camera field");
      }
    }
    CameraModel cam;
    try {
      cam.fx = j.at("fx").get<double>();
      cam.fy = j.at("fy").get<double>();
      cam.cx = j.at("cx").get<double>();
      cam.cy = j.at("cy").get<double>();
      cam.width = j.at("width").get<int>();
      cam.height = j.at("height").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("camera", e.what());
    }
    const auto& m = j.at("world_to_cam");
    if (!m.is_array() || m.size() != 16) {
      throw ParseError("world_to_cam", "expected 16 numbers in row-major order");
    }
    for (std::size_t i = 0; i < 16; ++i) {
      if (!m[i].is_number()) throw ParseError("world_to_cam", "entry " + std::to_string(i) + " is not a number");
      cam.world_to_cam[i] = m[i].get<double>();
    }
    cam.validate();
    return cam;
  }

  static CameraModel load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open camera file " + path.string());
    nlohmann::json j;
    try {
      in >> j;
      return from_json(j);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("json", path.string() + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ": " + e.what());
    }
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing", 0);
    out << to_json().dump(2) << '\n';
  }
};

}  // namespace partlift
