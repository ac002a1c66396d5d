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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "partlift/core/error.hpp"
#include "partlift/core/vocabulary.hpp"

namespace partlift {

/// kStandard scores every part (0 when neither side has it); kPartNetE
/// excludes parts missing from the ground truth of the object.
enum class MetricMode { kStandard, kPartNetE };

inline const char* metric_name(MetricMode m) { return m == MetricMode::kStandard ? "standard" : "partnete"; }

inline MetricMode parse_metric_mode(const std::string& s) {
  if (s == "standard") return MetricMode::kStandard;
  if (s == "partnete") return MetricMode::kPartNetE;
  throw ValidationError("unknown metric mode '" + s + "' (expected standard or partnete)");
}

/// Point-set IoU of one part; nullopt means excluded.
inline std::optional<double> iou(std::span<const LabelId> pred, std::span<const LabelId> gt, LabelId part,
                                 MetricMode mode) {
  if (pred.size() != gt.size()) {
    throw ValidationError("iou: prediction has " + std::to_string(pred.size()) + " points, ground truth has " +
                          std::to_string(gt.size()));
  }
  std::size_t inter = 0, uni = 0, gt_count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == part;
    const bool g = gt[i] == part;
    inter += p && g;
    uni += p || g;
    gt_count += g;
  }
  if (mode == MetricMode::kPartNetE && gt_count == 0) return std::nullopt;
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

struct IoUReport {
  MetricMode mode = MetricMode::kStandard;
  std::map<LabelId, std::optional<double>> per_part;
  /// Mean over included parts; 0 when nothing is included.
  double category_miou = 0.0;

  nlohmann::json to_json(const PartVocabulary* vocab = nullptr) const {
    nlohmann::json parts = nlohmann::json::object();
    for (const auto& [label, value] : per_part) {
      const std::string key = vocab && vocab->contains(label) ? vocab->name(label) : std::to_string(label);
      parts[key] = value ? nlohmann::json(*value) : nlohmann::json("excluded");
    }
    return {{"mode", metric_name(mode)}, {"per_part", parts}, {"category_miou", category_miou}};
  }
};

inline double mean_of_included(const std::map<LabelId, std::optional<double>>& per_part) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [label, v] : per_part) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

/// Per-object report over `parts`.
inline IoUReport object_report(std::span<const LabelId> pred, std::span<const LabelId> gt,
                               std::span<const LabelId> parts, MetricMode mode) {
  IoUReport r;
  r.mode = mode;
  for (LabelId part : parts) r.per_part[part] = iou(pred, gt, part, mode);
  r.category_miou = mean_of_included(r.per_part);
  return r;
}

/// Category summary: per part, the mean of its included per-object values;
/// the category mIoU averages the parts that have at least one.
inline IoUReport miou_category(std::span<const IoUReport> objects, std::span<const LabelId> parts) {
  if (objects.empty()) throw ValidationError("miou_category: no objects");
  IoUReport r;
  r.mode = objects.front().mode;
  for (LabelId part : parts) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& obj : objects) {
      if (obj.mode != r.mode) throw ValidationError("miou_category: mixed metric modes");
      auto it = obj.per_part.find(part);
      if (it != obj.per_part.end() && it->second) {
        sum += *it->second;
        ++n;
      } else if (it == obj.per_part.end() && r.mode == MetricMode::kStandard) {
        ++n;  // never evaluated: scores 0 in standard mode
      }
    }
    r.per_part[part] = n ? std::optional<double>(sum / static_cast<double>(n)) : std::nullopt;
  }
  r.category_miou = mean_of_included(r.per_part);
  return r;
}

inline std::vector<LabelId> all_parts(const PartVocabulary& vocab) {
  std::vector<LabelId> parts(vocab.size());
  for (std::size_t i = 0; i < parts.size(); ++i) parts[i] = static_cast<LabelId>(i);
  return parts;
}

}  // namespace partlift
