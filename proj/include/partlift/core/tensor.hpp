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

// TBT1 binary tensor container.
//
// Layout (all integers little-endian):
//   "TBT1" | dtype code (u8) | ndim (u8) | ndim x extent (u32) | payload
// The payload is the row-major element array, element size given by dtype.

#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "partlift/core/error.hpp"

namespace partlift {

static_assert(std::endian::native == std::endian::little,
              "TBT1 payloads are copied verbatim; big-endian hosts unsupported");

enum class DType : std::uint8_t {
  kF32 = 1,
  kI32 = 2,
  kU16 = 3,
  kU8 = 4,
};

inline constexpr std::array<char, 4> kTensorMagic = {'T', 'B', 'T', '1'};

inline std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::kF32:
    case DType::kI32:
      return 4;
    case DType::kU16:
      return 2;
    case DType::kU8:
      return 1;
  }
  throw ParseError("dtype", "unknown dtype code " +
                                std::to_string(static_cast<int>(t)));
}

inline const char* dtype_name(DType t) {
  switch (t) {
    case DType::kF32: return "f32";
    case DType::kI32: return "i32";
    case DType::kU16: return "u16";
    case DType::kU8: return "u8";
  }
  return "?";
}

template <typename T>
constexpr DType dtype_of() {
  if constexpr (std::is_same_v<T, float>) return DType::kF32;
  else if constexpr (std::is_same_v<T, std::int32_t>) return DType::kI32;
  else if constexpr (std::is_same_v<T, std::uint16_t>) return DType::kU16;
  else if constexpr (std::is_same_v<T, std::uint8_t>) return DType::kU8;
  else static_assert(sizeof(T) == 0, "unsupported tensor element type");
}

/// A dense row-major tensor with one of the four TBT1 element types.
class Tensor {
 public:
  Tensor() = default;

  Tensor(DType dtype, std::vector<std::uint32_t> shape)
      : dtype_(dtype), shape_(std::move(shape)) {
    if (shape_.size() > 255) throw ValidationError("tensor rank exceeds 255");
    data_.resize(byte_size_for(dtype_, shape_));
  }

  template <typename T>
  static Tensor from(std::vector<std::uint32_t> shape, std::span<const T> values) {
    Tensor t(dtype_of<T>(), std::move(shape));
    if (values.size() != t.element_count()) {
      throw ValidationError("tensor value count " + std::to_string(values.size()) +
                            " does not match shape product " +
                            std::to_string(t.element_count()));
    }
    if (!values.empty()) std::memcpy(t.data_.data(), values.data(), t.data_.size());
    return t;
  }

  template <typename T>
  static Tensor from(std::vector<std::uint32_t> shape, const std::vector<T>& values) {
    return from<T>(std::move(shape), std::span<const T>(values));
  }

  DType dtype() const noexcept { return dtype_; }
  const std::vector<std::uint32_t>& shape() const noexcept { return shape_; }
  std::size_t ndim() const noexcept { return shape_.size(); }
  std::uint32_t dim(std::size_t i) const { return shape_.at(i); }
  std::span<const std::byte> bytes() const noexcept { return data_; }
  std::span<std::byte> bytes() noexcept { return data_; }

  std::size_t element_count() const noexcept {
    std::size_t n = 1;
    for (auto e : shape_) n *= e;
    return n;
  }

  /// Typed copy of the payload. Throws if T does not match the dtype.
  template <typename T>
  std::vector<T> values() const {
    if (dtype_of<T>() != dtype_) {
      throw ValidationError(std::string("tensor holds ") + dtype_name(dtype_) +
                            ", requested " + dtype_name(dtype_of<T>()));
    }
    std::vector<T> out(element_count());
    if (!out.empty()) std::memcpy(out.data(), data_.data(), data_.size());
    return out;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

  static std::size_t byte_size_for(DType dtype,
                                   const std::vector<std::uint32_t>& shape) {
    std::uint64_t n = dtype_size(dtype);
    for (auto e : shape) {
      n *= e;
      if (n > (std::uint64_t{1} << 40)) {
        throw ValidationError("tensor payload exceeds 1 TiB");
      }
    }
    return static_cast<std::size_t>(n);
  }

 private:
  DType dtype_ = DType::kU8;
  std::vector<std::uint32_t> shape_;
  std::vector<std::byte> data_;
};

namespace detail {

inline void put(std::ostream& out, const void* src, std::size_t n,
                std::uint64_t& offset) {
  out.write(static_cast<const char*>(src), static_cast<std::streamsize>(n));
  if (!out) throw IoError("tensor sink write failed", offset);
  offset += n;
}

inline std::size_t get(std::istream& in, void* dst, std::size_t n) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount());
}

}  // namespace detail

/// Serializes `t` to `out`; returns the number of bytes written.
inline std::uint64_t write_tensor(const Tensor& t, std::ostream& out) {
  std::uint64_t offset = 0;
  detail::put(out, kTensorMagic.data(), kTensorMagic.size(), offset);
  const auto code = static_cast<std::uint8_t>(t.dtype());
  const auto ndim = static_cast<std::uint8_t>(t.ndim());
  detail::put(out, &code, 1, offset);
  detail::put(out, &ndim, 1, offset);
  for (std::uint32_t e : t.shape()) detail::put(out, &e, 4, offset);
  if (!t.bytes().empty()) {
    detail::put(out, t.bytes().data(), t.bytes().size(), offset);
  }
  return offset;
}

inline Tensor read_tensor(std::istream& in) {
  std::array<char, 4> magic{};
  if (detail::get(in, magic.data(), 4) != 4) {
    throw ParseError("magic", "stream shorter than the 4-byte magic");
  }
  if (magic != kTensorMagic) {
    throw ParseError("magic", "bad magic '" + std::string(magic.data(), 4) +
                                  "', expected 'TBT1'");
  }
  std::uint8_t code = 0;
  if (detail::get(in, &code, 1) != 1) throw ParseError("dtype", "truncated header");
  if (code < 1 || code > 4) {
    throw ParseError("dtype", "unknown dtype code " + std::to_string(code));
  }
  std::uint8_t ndim = 0;
  if (detail::get(in, &ndim, 1) != 1) throw ParseError("ndim", "truncated header");
  std::vector<std::uint32_t> shape(ndim);
  for (std::size_t i = 0; i < ndim; ++i) {
    if (detail::get(in, &shape[i], 4) != 4) {
      throw ParseError("shape", "truncated extent " + std::to_string(i) + " of " +
                                    std::to_string(ndim));
    }
  }
  Tensor t(static_cast<DType>(code), std::move(shape));
  const std::size_t expected = t.bytes().size();
  const std::size_t got = expected == 0 ? 0 : detail::get(in, t.bytes().data(), expected);
  if (got != expected) {
    throw ParseError("payload", "truncated payload: expected " +
                                    std::to_string(expected) + " bytes, got " +
                                    std::to_string(got));
  }
  return t;
}

inline void save_tensor(const Tensor& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing", 0);
  write_tensor(t, out);
}

inline Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open tensor file " + path.string());
  try {
    return read_tensor(in);
  } catch (const ParseError& e) {
    throw ParseError(e.field(), e.detail() + " in " + path.string());
  }
}

/// Throws unless `t` has the given dtype and rank.
inline void expect_tensor(const Tensor& t, DType dtype, std::size_t ndim,
                          const std::string& what) {
  if (t.dtype() != dtype) {
    throw ValidationError(what + ": expected dtype " + dtype_name(dtype) + ", got " +
                          dtype_name(t.dtype()));
  }
  if (t.ndim() != ndim) {
    throw ValidationError(what + ": expected rank " + std::to_string(ndim) +
                          ", got " + std::to_string(t.ndim()));
  }
}

}  // namespace partlift
