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

#include <cstdint>
#include <stdexcept>
#include <string>

namespace partlift {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input failed a contract check (bad shape, bad config value, missing file).
/// The CLI maps this to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Index or coordinate outside the addressed container.
class BoundsError : public Error {
 public:
  using Error::Error;
};

/// Byte sink or source failed.
class IoError : public Error {
 public:
  IoError(const std::string& what, std::uint64_t offset)
      : Error(what + " at byte offset " + std::to_string(offset)),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Malformed serialized data. `field()` names the part of the record that
/// could not be decoded ("magic", "dtype", "shape", "payload", ...).
class ParseError : public ValidationError {
 public:
  ParseError(std::string field, const std::string& what)
      : ValidationError(field + ": " + what), field_(std::move(field)), detail_(what) {}

  const std::string& field() const noexcept { return field_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string field_;
  std::string detail_;
};

#define PARTLIFT_REQUIRE(cond, msg)                \
  do {                                             \
    if (!(cond)) throw ::partlift::ValidationError(msg); \
  } while (0)

}  // namespace partlift
