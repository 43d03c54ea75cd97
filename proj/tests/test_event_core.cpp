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

#include "evframe/event_core.hpp"

using namespace evframe;

namespace {

Image gray(int w, int h, std::uint8_t v) { return Image(w, h, 1, v); }

EventStream random_stream(Rng& rng, std::size_t n, int w, int h, std::int64_t t_max = 100000) {
  EventStream s{w, h, {}};
  std::vector<std::int64_t> ts(n);
  for (auto& t : ts) t = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(t_max)));
  std::sort(ts.begin(), ts.end());
  for (auto t : ts)
    s.events.push_back({static_cast<std::int32_t>(rng.below(w)), static_cast<std::int32_t>(rng.below(h)), t,
                        rng.bernoulli(0.5) ? 1 : -1});
  return s;
}

}  // namespace

TEST(SimulateEvents, IdenticalFramesGiveNothing) {
  const auto a = gray(8, 6, 100);
  EXPECT_TRUE(simulate_events(a, a, 0, 1000, {}).events.empty());
}

TEST(SimulateEvents, TwoCrossingsAtOnePixel) {
  SimConfig cfg;
  cfg.log_eps = 0.0;
  auto a = gray(4, 3, 40), b = a;
  // delta = ln(b/a) = 2C with C = ln(1.5): 40 -> 90
  cfg.threshold = std::log(1.5);
  b.at(2, 1) = 90;
  const auto s = simulate_events(a, b, 0, 100, cfg);
  ASSERT_EQ(s.events.size(), 2u);
  for (const auto& e : s.events) {
    EXPECT_EQ(e.x, 2);
    EXPECT_EQ(e.y, 1);
    EXPECT_EQ(e.p, 1);
  }
  EXPECT_EQ(s.events[0].t, 50);
  EXPECT_EQ(s.events[1].t, 100);
}

TEST(SimulateEvents, HalvedBrightnessOneOffEventPerPixel) {
  SimConfig cfg;
  cfg.threshold = std::log(2.0);
  cfg.log_eps = 0.0;
  Image a(5, 4, 1), b(5, 4, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) {
      a.at(x, y) = static_cast<std::uint8_t>(2 * (10 + 5 * x + 20 * y));
      b.at(x, y) = static_cast<std::uint8_t>(10 + 5 * x + 20 * y);
    }
  const auto s = simulate_events(a, b, 0, 1000, cfg);
  ASSERT_EQ(s.events.size(), 20u);
  for (const auto& e : s.events) EXPECT_EQ(e.p, -1);
}

TEST(SimulateEvents, SortedWithRowMajorTies) {
  Rng rng(3);
  Image a(9, 7, 1), b(9, 7, 1);
  for (auto& p : a.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  for (auto& p : b.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  const auto s = simulate_events(a, b, 10, 1010, {});
  ASSERT_FALSE(s.events.empty());
  for (std::size_t i = 1; i < s.events.size(); ++i) {
    const auto& p = s.events[i - 1];
    const auto& q = s.events[i];
    ASSERT_LE(p.t, q.t);
    if (p.t == q.t) EXPECT_LE(p.y * 9 + p.x, q.y * 9 + q.x);
  }
  for (const auto& e : s.events) {
    EXPECT_GT(e.t, 10);
    EXPECT_LE(e.t, 1010);
  }
  EXPECT_EQ(simulate_events(a, b, 10, 1010, {}), s);
}

TEST(SimulateEvents, CountMatchesFloorRule) {
  Rng rng(4);
  SimConfig cfg;
  cfg.threshold = 0.3;
  Image a(6, 5, 1), b(6, 5, 1);
  for (auto& p : a.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  for (auto& p : b.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  std::size_t expected = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = std::log(b.pixels[i] / 255.0 + cfg.log_eps) - std::log(a.pixels[i] / 255.0 + cfg.log_eps);
    expected += static_cast<std::size_t>(std::floor(std::abs(d) / cfg.threshold + 1e-9));
  }
  EXPECT_EQ(simulate_events(a, b, 0, 100, cfg).events.size(), expected);
}

TEST(SimulateEvents, Errors) {
  EXPECT_THROW(simulate_events(gray(4, 4, 1), gray(4, 5, 1), 0, 10, {}), ShapeError);
  EXPECT_THROW(simulate_events(gray(4, 4, 1), gray(4, 4, 1), 10, 10, {}), DomainError);
  EXPECT_THROW(simulate_events(Image(4, 4, 3), Image(4, 4, 3), 0, 10, {}), ShapeError);
  SimConfig bad;
  bad.threshold = 0.0;
  EXPECT_THROW(simulate_events(gray(4, 4, 1), gray(4, 4, 2), 0, 10, bad), DomainError);
}

TEST(NormalizeTimestamps, Examples) {
  EventStream s{4, 4, {{0, 0, 0, 1}, {0, 0, 50, 1}, {0, 0, 100, 1}}};
  EXPECT_EQ(normalize_timestamps(s, 3), (std::vector<double>{0, 1, 2}));
  EXPECT_EQ(normalize_timestamps(s, 1), (std::vector<double>{0, 0, 0}));
  EventStream same{4, 4, {{0, 0, 7, 1}, {1, 0, 7, -1}}};
  EXPECT_EQ(normalize_timestamps(same, 5), (std::vector<double>{0, 0}));
  EXPECT_TRUE(normalize_timestamps(EventStream{4, 4, {}}, 5).empty());
  EXPECT_THROW(normalize_timestamps(s, 0), DomainError);
}

TEST(NormalizeTimestamps, RangeProperty) {
  Rng rng(8);
  const auto s = random_stream(rng, 500, 10, 10);
  for (int b : {1, 2, 5, 9})
    for (double t : normalize_timestamps(s, b)) {
      EXPECT_GE(t, 0.0);
      EXPECT_LE(t, b - 1.0);
    }
}

TEST(VoxelGrid, EmptyStream) {
  const auto g = build_voxel_grid(EventStream{5, 4, {}}, 3);
  EXPECT_EQ(g.data.dims(), (Dims{3, 4, 5}));
  EXPECT_EQ(g.sum(), 0.0);
}

TEST(VoxelGrid, TwoEventsHandEvaluated) {
  EventStream s{4, 4, {{1, 2, 0, 1}, {1, 2, 100, 1}}};
  const auto g = build_voxel_grid(s, 2);
  for (int b = 0; b < 2; ++b)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) EXPECT_EQ(g.at(b, y, x), (x == 1 && y == 2) ? 1.0 : 0.0);
}

TEST(VoxelGrid, QuarterSplit) {
  // t* of the middle event = 4 * 25/400 = 0.25 with B = 5
  EventStream s{3, 3, {{0, 0, 0, 1}, {2, 1, 25, 1}, {0, 0, 400, 1}}};
  const auto g = build_voxel_grid(s, 5);
  EXPECT_DOUBLE_EQ(g.at(0, 1, 2), 0.75);
  EXPECT_DOUBLE_EQ(g.at(1, 1, 2), 0.25);
  EXPECT_EQ(g.at(2, 1, 2), 0.0);
}

TEST(VoxelGrid, TemporalWeightsSumToOne) {
  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    VoxelGrid g(6, 1, 1);
    const double t = rng.uniform(0.0, 5.0);
    detail::splat_temporal(g, 0, 0, t, 1.0);
    EXPECT_EQ(g.sum(), 1.0) << t;
  }
  VoxelGrid g(6, 1, 1);
  detail::splat_temporal(g, 0, 0, 5.0, 1.0);
  EXPECT_EQ(g.at(5, 0, 0), 1.0);
}

TEST(VoxelGrid, MassConservation) {
  Rng rng(1);
  const auto s = random_stream(rng, 10000, 64, 48);
  double pol = 0;
  for (const auto& e : s.events) pol += e.p;
  EXPECT_NEAR(build_voxel_grid(s, 5).sum(), pol, 1e-6);
}

TEST(VoxelGrid, DegenerateTimesKeepMass) {
  EventStream s{3, 3, {{0, 0, 5, 1}, {1, 1, 5, 1}, {2, 2, 5, -1}}};
  const auto g = build_voxel_grid(s, 4);
  EXPECT_EQ(g.sum(), 1.0);
  EXPECT_EQ(g.at(0, 1, 1), 1.0);
}

TEST(VoxelGrid, SubpixelSplatConservesMass) {
  SubpixelEventStream s{5, 5, {{1.25, 2.5, 0, 1}, {3.0, 0.75, 50, -1}, {0.5, 0.5, 100, 1}}};
  const auto g = build_voxel_grid(s, 3);
  EXPECT_NEAR(g.sum(), 1.0, 1e-12);
  // (1.25, 2.5) at t* = 0: weights 0.75*0.5 at (1,2)
  EXPECT_NEAR(g.at(0, 2, 1), 0.375, 1e-12);
  EXPECT_NEAR(g.at(0, 3, 2), 0.125, 1e-12);
  SubpixelEventStream outside{5, 5, {{4.5, 0.0, 0, 1}}};
  EXPECT_THROW(build_voxel_grid(outside, 2), DomainError);
}

TEST(VoxelGrid, Errors) {
  EXPECT_THROW(build_voxel_grid(EventStream{2, 2, {{2, 0, 0, 1}}}, 2), DomainError);
  EXPECT_THROW(build_voxel_grid(EventStream{2, 2, {{0, -1, 0, 1}}}, 2), DomainError);
  EXPECT_THROW(build_voxel_grid(EventStream{2, 2, {{0, 0, 0, 2}}}, 2), DomainError);
  EXPECT_THROW(build_voxel_grid(EventStream{2, 2, {}}, 0), DomainError);
}

TEST(VoxelGrid, LinearityAndAntisymmetry) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    auto s1 = random_stream(rng, 200, 16, 12, 1000);
    auto s2 = random_stream(rng, 150, 16, 12, 1000);
    // share the time span so normalisation agrees
    s1.events.front().t = 0;
    s2.events.front().t = 0;
    s1.events.back().t = 1000;
    s2.events.back().t = 1000;
    EventStream both{16, 12, s1.events};
    both.events.insert(both.events.end(), s2.events.begin(), s2.events.end());
    std::stable_sort(both.events.begin(), both.events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
    const auto g = build_voxel_grid(both, 5);
    const auto sum = build_voxel_grid(s1, 5).data + build_voxel_grid(s2, 5).data;
    EXPECT_LE(max_abs_diff(g.data, sum), 1e-9);
    EventStream flipped = both;
    for (auto& e : flipped.events) e.p = -e.p;
    EXPECT_EQ(build_voxel_grid(flipped, 5).data, scaled(g.data, -1.0));
  }
}

TEST(ModalityDropout, Limits) {
  Tensord x({3, 2, 2}, 0.5);
  EXPECT_EQ(modality_dropout(x, 0.0, 1), x);
  EXPECT_EQ(modality_dropout(x, 1.0, 1), Tensord::zeros({3, 2, 2}));
  EXPECT_THROW(modality_dropout(x, 1.5, 1), DomainError);
  EXPECT_THROW(modality_dropout(x, -0.1, 1), DomainError);
}

TEST(ModalityDropout, RateAndDeterminism) {
  Tensord x({1, 1, 1}, 1.0);
  int zeroed = 0;
  for (std::uint64_t s = 0; s < 10000; ++s) zeroed += modality_dropout(x, 0.15, s)[0] == 0.0;
  EXPECT_GE(zeroed, 1400);
  EXPECT_LE(zeroed, 1600);
  for (std::uint64_t s = 0; s < 50; ++s) EXPECT_EQ(modality_dropout(x, 0.5, s), modality_dropout(x, 0.5, s));
}

TEST(ImageToTensor, Layout) {
  Image img(2, 1, 3);
  img.at(1, 0, 2) = 255;
  const auto t = image_to_tensor(img);
  EXPECT_EQ(t.dims(), (Dims{3, 1, 2}));
  EXPECT_EQ(t(2, 0, 1), 1.0);
  EXPECT_EQ(t(0, 0, 1), 0.0);
}
