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

#include <gtest/gtest.h>

#include "partlift/core/random.hpp"
#include "partlift/eval/iou.hpp"

namespace partlift {
namespace {

using Labels = std::vector<LabelId>;

TEST(IoUTest, IdentityIsOne) {
  const Labels x = {0, 1, 1, 2};
  EXPECT_DOUBLE_EQ(*iou(x, x, 1, MetricMode::kStandard), 1.0);
}

TEST(IoUTest, HandCountedHalf) {
  // pred covers 2 points, gt 4, overlap 2.
  const Labels pred = {0, 0, 1, 1, 1, 1};
  const Labels gt = {0, 0, 0, 0, 1, 1};
  EXPECT_NEAR(*iou(pred, gt, 0, MetricMode::kStandard), 0.5, 1e-9);
}

TEST(IoUTest, AbsentPartStandardZeroPartNetEExcluded) {
  const Labels pred = {0, 0, -1};
  const Labels gt = {0, 0, 0};
  EXPECT_EQ(iou(pred, gt, 1, MetricMode::kStandard), 0.0);
  EXPECT_EQ(iou(pred, gt, 1, MetricMode::kPartNetE), std::nullopt);
  // Predicted but absent in gt: still excluded under PartNetE.
  const Labels pred2 = {1, 0, 0};
  EXPECT_EQ(iou(pred2, gt, 1, MetricMode::kPartNetE), std::nullopt);
  EXPECT_EQ(iou(pred2, gt, 1, MetricMode::kStandard), 0.0);
}

TEST(IoUTest, LengthMismatchThrows) {
  EXPECT_THROW(iou(Labels{0}, Labels{0, 1}, 0, MetricMode::kStandard), ValidationError);
}

TEST(IoUTest, TwoPartMean) {
  // Part 0: IoU 0.5; part 1: IoU 1.0.
  const Labels pred = {0, 0, 1, 1, -1, -1};
  const Labels gt = {0, 0, 1, 1, 0, 0};
  const Labels parts = {0, 1};
  const auto r = object_report(pred, gt, parts, MetricMode::kStandard);
  EXPECT_NEAR(*r.per_part.at(0), 0.5, 1e-9);
  EXPECT_NEAR(*r.per_part.at(1), 1.0, 1e-9);
  EXPECT_NEAR(r.category_miou, 0.75, 1e-9);
  const auto single = miou_category(std::vector<IoUReport>{r}, parts);
  EXPECT_NEAR(single.category_miou, 0.75, 1e-9);
}

TEST(IoUTest, PartNetEDropsPartAbsentEverywhere) {
  const Labels parts = {0, 1, 2};
  std::vector<IoUReport> objs;
  objs.push_back(object_report(Labels{0, 1, 1}, Labels{0, 1, 1}, parts, MetricMode::kPartNetE));
  objs.push_back(object_report(Labels{0, 0, 1}, Labels{0, 1, 1}, parts, MetricMode::kPartNetE));
  const auto cat = miou_category(objs, parts);
  EXPECT_EQ(cat.per_part.at(2), std::nullopt);
  // part 0: (1 + 0.5)/2, part 1: (1 + 0.5)/2
  EXPECT_NEAR(cat.category_miou, 0.75, 1e-9);
  const auto j = cat.to_json(nullptr);
  EXPECT_EQ(j["per_part"]["2"], "excluded");
  EXPECT_EQ(j["mode"], "partnete");

  std::vector<IoUReport> std_objs;
  std_objs.push_back(object_report(Labels{0, 1, 1}, Labels{0, 1, 1}, parts, MetricMode::kStandard));
  std_objs.push_back(object_report(Labels{0, 0, 1}, Labels{0, 1, 1}, parts, MetricMode::kStandard));
  EXPECT_NEAR(miou_category(std_objs, parts).category_miou, 1.5 / 3.0, 1e-9);
  EXPECT_THROW(miou_category(std::vector<IoUReport>{}, parts), ValidationError);
}

TEST(IoUTest, ThreeObjectsMatchFlatRecount) {
  Rng rng(41);
  const Labels parts = {0, 1, 2, 3};
  for (MetricMode mode : {MetricMode::kStandard, MetricMode::kPartNetE}) {
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<Labels> preds, gts;
      std::vector<IoUReport> reports;
      for (int o = 0; o < 3; ++o) {
        Labels p(40), g(40);
        for (auto& x : p) x = static_cast<LabelId>(rng.below(5)) - 1;
        // Object o never contains part o in its ground truth.
        for (auto& x : g) {
          do x = static_cast<LabelId>(rng.below(4)); while (x == o);
        }
        reports.push_back(object_report(p, g, parts, mode));
        preds.push_back(p);
        gts.push_back(g);
      }
      // Recount from raw labels in one pass per (object, part).
      double part_sum = 0.0;
      int part_n = 0;
      for (LabelId part : parts) {
        double s = 0.0;
        int n = 0;
        for (int o = 0; o < 3; ++o) {
          int i = 0, u = 0, gc = 0;
          for (std::size_t k = 0; k < 40; ++k) {
            const bool a = preds[o][k] == part, b = gts[o][k] == part;
            i += a && b;
            u += a || b;
            gc += b;
          }
          if (mode == MetricMode::kPartNetE && gc == 0) continue;
          s += u ? static_cast<double>(i) / u : 0.0;
          ++n;
        }
        if (n) {
          part_sum += s / n;
          ++part_n;
        }
      }
      EXPECT_NEAR(miou_category(reports, parts).category_miou, part_sum / part_n, 1e-9);
    }
  }
}

TEST(IoUTest, SymmetryBoundsAndIrrelevantRelabeling) {
  Rng rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    Labels a(30), b(30);
    for (auto& x : a) x = static_cast<LabelId>(rng.below(4)) - 1;
    for (auto& x : b) x = static_cast<LabelId>(rng.below(4)) - 1;
    const double ab = *iou(a, b, 1, MetricMode::kStandard);
    EXPECT_DOUBLE_EQ(ab, *iou(b, a, 1, MetricMode::kStandard));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    auto c = a;
    for (auto& x : c) if (x != 1) x = x == 0 ? 2 : 0;
    EXPECT_DOUBLE_EQ(*iou(c, b, 1, MetricMode::kStandard), ab);
  }
}

TEST(IoUTest, MetricModeParsing) {
  EXPECT_EQ(parse_metric_mode("partnete"), MetricMode::kPartNetE);
  EXPECT_THROW(parse_metric_mode("PartNetE"), ValidationError);
}

}  // namespace
}  // namespace partlift
