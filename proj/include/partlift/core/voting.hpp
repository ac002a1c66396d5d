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

// Thresholded weighted voting shared by every voting step of the pipeline.
//
// A label is dominant when its weight is the unique maximum AND reaches the
// fraction `cutoff` of the total weight. Anything else abstains.

#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>

#include "partlift/core/error.hpp"
#include "partlift/core/vocabulary.hpp"

namespace partlift {

inline constexpr double kDefaultCutoff = 0.6;

/// Relative slack on the cutoff comparison. Absorbs the rounding of
/// `cutoff * total` so that tallies sitting exactly on the threshold in real
/// arithmetic (e.g. {0.42, 0.28}) are accepted.
inline constexpr double kCutoffSlack = 1e-12;

class VoteTally {
 public:
  explicit VoteTally(double cutoff = kDefaultCutoff) : cutoff_(cutoff) {
    if (!(cutoff > 0.0 && cutoff <= 1.0)) {
      throw ValidationError("vote cutoff must lie in (0, 1], got " + std::to_string(cutoff));
    }
  }

  void add(LabelId label, double weight) {
    if (!(weight >= 0.0) || !std::isfinite(weight)) {
      throw ValidationError("vote weight must be finite and non-negative");
    }
    weights_[label] += weight;
  }

  double cutoff() const noexcept { return cutoff_; }
  const std::map<LabelId, double>& weights() const noexcept { return weights_; }
  bool empty() const noexcept { return weights_.empty(); }

  /// Sum in ascending label order.
  double total() const noexcept {
    double s = 0.0;
    for (const auto& [label, w] : weights_) s += w;
    return s;
  }

 private:
  double cutoff_;
  std::map<LabelId, double> weights_;
};

struct VoteOutcome {
  std::optional<LabelId> label;
  /// Winning weight over total weight; 0 when abstaining.
  double confidence = 0.0;
};

/// Full outcome of the dominance rule. Throws when the tally carries no
/// positive weight.
inline VoteOutcome resolve_vote(const VoteTally& tally) {
  const double total = tally.total();
  if (!(total > 0.0)) {
    throw ValidationError("dominant_label: tally has no positive weight");
  }
  LabelId best = kNoLabel;
  double best_w = -1.0;
  bool tied = false;
  for (const auto& [label, w] : tally.weights()) {
    if (w > best_w) {
      best = label;
      best_w = w;
      tied = false;
    } else if (w == best_w) {
      tied = true;
    }
  }
  if (tied) return {};
  if (best_w < tally.cutoff() * total * (1.0 - kCutoffSlack)) return {};
  return {best, best_w / total};
}

inline std::optional<LabelId> dominant_label(const VoteTally& tally) {
  return resolve_vote(tally).label;
}

}  // namespace partlift
