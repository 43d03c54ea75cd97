/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 The evframe Authors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>

#include "evframe/eval_metrics.hpp"
#include "oracles.hpp"

using namespace evframe;

namespace {

Detection box(double x, double y, double w, double h, double score = -1, int cls = 0, std::int64_t img = 0) {
  Detection d{img, cls, {x, y, w, h}, std::nullopt};
  if (score >= 0) d.score = score;
  return d;
}

CorruptionMatrix filled(std::size_t types, std::size_t sevs, const std::function<double(std::size_t, std::size_t)>& f) {
  CorruptionMatrix m(types, sevs);
  for (std::size_t c = 0; c < types; ++c)
    for (std::size_t s = 0; s < sevs; ++s) m.entries[c][s] = f(c, s);
  return m;
}

}  // namespace

TEST(Iou, Examples) {
  const BoxXYWH a{0, 0, 2, 2};
  EXPECT_EQ(iou(a, a), 1.0);
  EXPECT_EQ(iou(a, {5, 5, 1, 1}), 0.0);
  EXPECT_EQ(iou(a, {2, 0, 2, 2}), 0.0);
  EXPECT_DOUBLE_EQ(iou(a, {1, 1, 2, 2}), 1.0 / 7.0);
  EXPECT_EQ(iou({0, 0, 10, 10}, {0, 0, 10, 5}), 0.5);
}

TEST(Iou, Properties) {
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const BoxXYWH a{rng.uniform(0, 20), rng.uniform(0, 20), rng.uniform(0.1, 10), rng.uniform(0.1, 10)};
    const BoxXYWH b{rng.uniform(0, 20), rng.uniform(0, 20), rng.uniform(0.1, 10), rng.uniform(0.1, 10)};
    const double v = iou(a, b);
    EXPECT_EQ(v, iou(b, a));
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
    EXPECT_NEAR(v, oracle::box_iou(a, b), 1e-12);
    EXPECT_EQ(iou(a, a), 1.0);
  }
}

TEST(Match, Examples) {
  const auto gt = box(0, 0, 10, 10);
  const auto one = match_detections({box(0, 0, 10, 10, 0.7)}, {gt}, 0.5);
  EXPECT_EQ(one.tp, std::vector<bool>{true});
  EXPECT_EQ(one.unmatched_gt, 0u);
  const auto two = match_detections({box(0, 0, 10, 9, 0.4), box(0, 0, 10, 10, 0.8)}, {gt}, 0.5);
  EXPECT_EQ(two.scores, (std::vector<double>{0.8, 0.4}));
  EXPECT_EQ(two.tp, (std::vector<bool>{true, false}));
  EXPECT_EQ(two.matched_gt, (std::vector<int>{0, -1}));
  const auto miss = match_detections({box(50, 50, 3, 3, 0.9)}, {gt, box(1, 1, 4, 4)}, 0.5);
  EXPECT_EQ(miss.tp, std::vector<bool>{false});
  EXPECT_EQ(miss.unmatched_gt, 2u);
}

TEST(Match, PrefersHighestIouThenEarlierGt) {
  const auto r = match_detections({box(0, 0, 10, 10, 0.9)}, {box(0, 0, 10, 8), box(0, 0, 10, 10)}, 0.5);
  EXPECT_EQ(r.matched_gt, std::vector<int>{1});
  const auto tie = match_detections({box(0, 0, 10, 10, 0.9)}, {box(0, 0, 10, 8), box(0, 2, 10, 8)}, 0.5);
  EXPECT_EQ(tie.matched_gt, std::vector<int>{0});
}

TEST(Match, AgreesWithGreedyOracle) {
  Rng rng(2);
  const auto& pal = oracle::box_palette();
  for (int trial = 0; trial < 5000; ++trial) {
    DetectionSet preds, gts;
    for (int i = 0; i < 3; ++i) preds.push_back({0, 0, pal[rng.below(pal.size())], std::round(rng.uniform() * 4) / 4});
    for (int i = 0; i < 2; ++i) gts.push_back({0, 0, pal[rng.below(pal.size())], std::nullopt});
    for (int t = 0; t < kIouThresholds; ++t)
      EXPECT_EQ(match_detections(preds, gts, iou_threshold(t)).tp, oracle::greedy_flags(preds, gts, iou_threshold(t)));
  }
}

TEST(AveragePrecision, Examples) {
  EXPECT_EQ(average_precision({true}, 1), 1.0);
  EXPECT_EQ(average_precision({false}, 1), 0.0);
  EXPECT_EQ(average_precision({}, 3), 0.0);
  EXPECT_EQ(average_precision({}, 0), 0.0);
  const double ap = average_precision({true, false, true}, 2);
  EXPECT_NEAR(ap, 0.8333, 0.01);
  // 51 recall points at precision 1, 50 at 2/3
  EXPECT_NEAR(ap, (51.0 + 50.0 * (2.0 / 3.0)) / 101.0, 1e-15);
}

TEST(AveragePrecision, Properties) {
  Rng rng(3);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<bool> flags;
    const std::size_t n = rng.below(12);
    std::size_t tp = 0;
    for (std::size_t i = 0; i < n; ++i) {
      flags.push_back(rng.bernoulli(0.5));
      tp += flags.back();
    }
    const std::size_t n_gt = tp + rng.below(4);
    if (n_gt == 0) continue;
    const double ap = average_precision(flags, n_gt);
    EXPECT_GE(ap, 0.0);
    EXPECT_LE(ap, 1.0);
    EXPECT_DOUBLE_EQ(ap, oracle::ap101(flags, n_gt));
    auto with_fp = flags;
    with_fp.push_back(false);
    EXPECT_LE(average_precision(with_fp, n_gt), ap);
    if (tp < n_gt) {
      auto with_tp = flags;
      with_tp.push_back(true);
      EXPECT_GE(average_precision(with_tp, n_gt), ap);
    }
  }
}

TEST(MapCoco, PerfectAndEmpty) {
  DetectionSet gts{box(0, 0, 10, 10, -1, 0, 1), box(30, 30, 5, 8, -1, 1, 1), box(2, 2, 4, 4, -1, 2, 2)};
  DetectionSet perfect;
  for (auto g : gts) {
    g.score = 0.9;
    perfect.push_back(g);
  }
  const auto p = map_coco(perfect, gts);
  EXPECT_EQ(p.map, 1.0);
  EXPECT_EQ(p.map50, 1.0);
  EXPECT_EQ(p.per_class.size(), 3u);
  const auto e = map_coco({}, gts);
  EXPECT_EQ(e.map, 0.0);
  EXPECT_EQ(e.map50, 0.0);
  EXPECT_THROW(map_coco(perfect, {}), EvaluationError);
}

TEST(MapCoco, ShiftedBoxMatchesOracle) {
  DetectionSet gts{box(0, 0, 10, 10, -1, 0), box(20, 20, 10, 10, -1, 1), box(40, 0, 8, 8, -1, 2)};
  DetectionSet preds{box(0, 0, 10, 10, 0.9, 0), box(22, 21, 10, 10, 0.8, 1), box(40, 0, 8, 8, 0.7, 2)};
  const auto r = map_coco(preds, gts);
  const auto o = oracle::coco_map(preds, gts);
  EXPECT_EQ(r.map, o.map);
  EXPECT_EQ(r.map50, o.map50);
  EXPECT_EQ(r.map50, 1.0);
  EXPECT_LT(r.map, 1.0);
  // the shifted box has IoU 64/136, below 0.5, so class 1 is lost at every threshold
  preds[1].bbox = {24, 24, 10, 10};
  EXPECT_NEAR(map_coco(preds, gts).map50, 2.0 / 3.0, 1e-15);
}

TEST(MapCoco, ClassesWithoutGtAreSkipped) {
  DetectionSet gts{box(0, 0, 10, 10, -1, 0)};
  DetectionSet preds{box(0, 0, 10, 10, 0.9, 0), box(0, 0, 10, 10, 0.95, 2)};
  const auto r = map_coco(preds, gts);
  EXPECT_EQ(r.map, 1.0);
  EXPECT_EQ(r.per_class.count(2), 0u);
}

TEST(MapCoco, HundredDetectionCapPerImage) {
  DetectionSet gts{box(0, 0, 10, 10, -1, 0)};
  DetectionSet preds;
  for (int i = 0; i < 100; ++i) preds.push_back(box(500 + i, 0, 5, 5, 0.9, 0));
  preds.push_back(box(0, 0, 10, 10, 0.1, 0));
  EXPECT_EQ(map_coco(preds, gts).map, 0.0);
  preds.pop_back();
  preds.push_back(box(0, 0, 10, 10, 0.1, 0, 7));
  gts.push_back(box(0, 0, 10, 10, -1, 0, 7));
  EXPECT_GT(map_coco(preds, gts).map, 0.0);
}

TEST(MapCoco, ExhaustiveSmallInstancesMatchOracle) {
  std::size_t count = 0, mismatches = 0;
  oracle::for_each_exhaustive_instance([&](const oracle::Instance& in) {
    ++count;
    const auto r = map_coco(in.preds, in.gts);
    const auto o = oracle::coco_map(in.preds, in.gts);
    if (r.map != o.map || r.map50 != o.map50) ++mismatches;
  });
  EXPECT_GT(count, 50000u);
  EXPECT_EQ(mismatches, 0u);
}

TEST(MapCoco, RandomSmallInstancesMatchOracle) {
  Rng rng(4);
  for (int i = 0; i < 3000; ++i) {
    const auto in = oracle::random_instance(rng);
    const auto r = map_coco(in.preds, in.gts);
    const auto o = oracle::coco_map(in.preds, in.gts);
    ASSERT_EQ(r.map, o.map) << i;
    ASSERT_EQ(r.map50, o.map50) << i;
  }
}

TEST(Mpc, Examples) {
  EXPECT_EQ(mpc(filled(15, 5, [](auto, auto) { return 0.5; })), 0.5);
  CorruptionMatrix m(2, 2);
  m.entries = {{0.4, 0.6}, {0.2, 0.8}};
  EXPECT_DOUBLE_EQ(mpc(m, MatrixMode::kAnyShape), 0.5);
  EXPECT_THROW(mpc(m), DomainError);
}

TEST(Mpc, NestedMeanEqualsFlatMean) {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto m = filled(15, 5, [&](auto, auto) { return rng.uniform(); });
    double flat = 0;
    for (const auto& row : m.entries)
      for (const auto& e : row) flat += *e;
    EXPECT_NEAR(mpc(m), flat / 75.0, 1e-12);
  }
}

TEST(Mpc, StructuralChecks) {
  auto m = filled(15, 5, [](auto, auto) { return 0.3; });
  m.entries[9][2].reset();
  try {
    mpc(m);
    FAIL() << "missing entry accepted";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("frost"), std::string::npos);
  }
  EXPECT_THROW(mpc(filled(14, 5, [](auto, auto) { return 0.3; })), DomainError);
  EXPECT_THROW(mpc(filled(15, 4, [](auto, auto) { return 0.3; })), DomainError);
  EXPECT_THROW(mpc(filled(15, 5, [](auto c, auto) { return c == 3 ? 1.5 : 0.3; })), DomainError);
  EXPECT_THROW(mpc(CorruptionMatrix{}, MatrixMode::kAnyShape), DomainError);
}

TEST(Rpc, Examples) {
  const auto same = rpc(0.6, filled(15, 5, [](auto, auto) { return 0.6; }));
  for (double v : same) EXPECT_NEAR(v, 1.0, 1e-15);
  const auto zero = rpc(0.6, filled(15, 5, [](auto, auto) { return 0.0; }));
  for (double v : zero) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(rpc(0.0, filled(15, 5, [](auto, auto) { return 0.1; })), DomainError);
  Rng rng(6);
  const auto mono = rpc(0.7, filled(15, 5, [&](auto, auto s) { return 0.5 - 0.1 * static_cast<double>(s) + rng.uniform(0, 0.05); }));
  EXPECT_EQ(mono.size(), 5u);
  for (std::size_t s = 1; s < 5; ++s) EXPECT_LE(mono[s], mono[s - 1]);
}

TEST(Rpc, ReportBundlesEverything) {
  const auto m = filled(15, 5, [](auto c, auto s) { return 0.5 - 0.01 * static_cast<double>(c + s); });
  const auto r = mpc_report(0.55, m);
  EXPECT_EQ(r.mpc, mpc(m));
  EXPECT_EQ(r.rpc, rpc(0.55, m));
  EXPECT_EQ(r.matrix.types(), 15u);
}
