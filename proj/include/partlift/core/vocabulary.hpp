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
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "partlift/core/error.hpp"

namespace partlift {

using LabelId = std::int32_t;

/// Background / unlabeled / abstained.
inline constexpr LabelId kNoLabel = -1;

/// Ordered part taxonomy. Ids are 0..size()-1 and names are unique.
class PartVocabulary {
 public:
  PartVocabulary() = default;

  explicit PartVocabulary(std::vector<std::string> names) : names_(std::move(names)) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i].empty()) throw ValidationError("part name " + std::to_string(i) + " is empty");
      auto [it, fresh] = index_.emplace(names_[i], static_cast<LabelId>(i));
      if (!fresh) throw ValidationError("duplicate part name '" + names_[i] + "'");
    }
  }

  std::size_t size() const noexcept { return names_.size(); }
  bool empty() const noexcept { return names_.empty(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  bool contains(LabelId id) const noexcept {
    return id >= 0 && static_cast<std::size_t>(id) < names_.size();
  }

  const std::string& name(LabelId id) const {
    if (!contains(id)) throw BoundsError("label id " + std::to_string(id) + " not in vocabulary");
    return names_[static_cast<std::size_t>(id)];
  }

  std::optional<LabelId> find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const PartVocabulary& a, const PartVocabulary& b) {
    return a.names_ == b.names_;
  }

  nlohmann::json to_json() const {
    nlohmann::json parts = nlohmann::json::array();
    for (std::size_t i = 0; i < names_.size(); ++i) {
      parts.push_back({{"id", i}, {"name", names_[i]}});
    }
    return {{"parts", parts}};
  }

  /// Accepts entries in any order; ids must cover 0..n-1 exactly once.
  static PartVocabulary from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("parts") || !j["parts"].is_array()) {
      throw ParseError("parts", "vocabulary document needs a \"parts\" array");
    }
    const auto& parts = j["parts"];
    std::vector<std::optional<std::string>> slots(parts.size());
    for (const auto& entry : parts) {
      if (!entry.contains("id") || !entry["id"].is_number_integer() ||
          !entry.contains("name") || !entry["name"].is_string()) {
        throw ParseError("parts", "each entry needs integer \"id\" and string \"name\"");
      }
      const auto id = entry["id"].get<std::int64_t>();
      if (id < 0 || static_cast<std::size_t>(id) >= slots.size()) {
        throw ParseError("id", "part id " + std::to_string(id) +
                                   " outside contiguous range [0, " +
                                   std::to_string(slots.size()) + ")");
      }
      auto& slot = slots[static_cast<std::size_t>(id)];
      if (slot) throw ParseError("id", "duplicate part id " + std::to_string(id));
      slot = entry["name"].get<std::string>();
    }
    std::vector<std::string> names;
    names.reserve(slots.size());
    for (auto& s : slots) names.push_back(std::move(*s));
    return PartVocabulary(std::move(names));
  }

  static PartVocabulary load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open vocabulary file " + path.string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("json", path.string() + ": " + e.what());
    }
    return from_json(j);
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing", 0);
    out << to_json().dump(2) << '\n';
  }

 private:
  std::vector<std::string> names_;
  std::map<std::string, LabelId> index_;
};

}  // namespace partlift
