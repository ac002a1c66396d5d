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

// Content-addressed cache for per-view mask labels, the output of the
// database search stage.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "partlift/core/error.hpp"

namespace partlift {

/// FNV-1a, 64-bit.
class ContentHash {
 public:
  void update(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001B3ULL;
    }
  }
  void update(const std::string& s) {
    update(s.data(), s.size());
    update("\0", 1);
  }
  /// Hashes a file's name relative to nothing and its full contents.
  void update_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path.string() + " for hashing");
    update(path.filename().string());
    char buf[1 << 15];
    while (in) {
      in.read(buf, sizeof(buf));
      update(buf, static_cast<std::size_t>(in.gcount()));
    }
  }
  /// Every regular file under `dir`, in sorted path order.
  void update_tree(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      update(std::filesystem::relative(f, dir).generic_string());
      update_file(f);
    }
  }

  std::string hex() const {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << state_;
    return s.str();
  }

 private:
  std::uint64_t state_ = 0xCBF29CE484222325ULL;
};

inline std::optional<nlohmann::json> cache_lookup(const std::filesystem::path& cache_dir, const std::string& key) {
  const auto path = cache_dir / (key + ".json");
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;  // corrupt entries are recomputed
  }
}

inline void cache_store(const std::filesystem::path& cache_dir, const std::string& key, const nlohmann::json& j) {
  std::filesystem::create_directories(cache_dir);
  const auto tmp = cache_dir / (key + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write cache entry " + tmp.string(), 0);
    out << j.dump();
  }
  std::filesystem::rename(tmp, cache_dir / (key + ".json"));
}

}  // namespace partlift
