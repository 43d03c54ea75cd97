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

// End-to-end smoke pipeline on a synthetic scene with random seeded weights:
// frames -> events -> voxel grid -> stems -> CAFR per scale -> FPN -> head -> decode + NMS -> mAP.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "evframe/cafr.hpp"
#include "evframe/detect_head.hpp"
#include "evframe/eval_metrics.hpp"
#include "evframe/event_core.hpp"
#include "evframe/image.hpp"
#include "evframe/rng.hpp"

namespace evframe {

struct DemoConfig {
  int width = 64;
  int height = 48;
  int channels = 32;  // stem / CAFR / head width
  int bins = 5;
  int objects = 3;
  std::uint64_t seed = 7;
  SimConfig sim{};
  std::int64_t t_a = 0;
  std::int64_t t_b = 50000;  // microseconds
};

struct DemoCheck {
  std::string name;
  bool ok = false;
  std::string detail;
};

struct DemoResult {
  Image frame_a, frame_b;  // RGB
  EventStream events;
  VoxelGrid grid;
  DetectionSet ground_truth;
  DetectionSet detections;
  MapResult eval;
  std::vector<DemoCheck> checks;

  bool all_ok() const {
    for (const auto& c : checks)
      if (!c.ok) return false;
    return true;
  }
};

inline Image to_gray(const Image& img) {
  if (img.channels == 1) return img;
  Image g(img.width, img.height, 1);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      g.at(x, y, 0) = clamp_to_byte(0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2));
  return g;
}

namespace detail {

struct SceneObject {
  BoxXYWH box;
  int category = 0;
  std::array<int, 3> color{};
};

inline Image render_scene(int w, int h, const std::vector<SceneObject>& objs, double dx, double dy) {
  Image img(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double base = 50.0 + 40.0 * y / std::max(1, h - 1) + 8.0 * std::sin(0.35 * x);
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = clamp_to_byte(base + 6.0 * c);
    }
  for (const auto& o : objs) {
    const int x0 = static_cast<int>(std::lround(o.box.x + dx)), y0 = static_cast<int>(std::lround(o.box.y + dy));
    for (int y = std::max(0, y0); y < std::min(h, y0 + static_cast<int>(o.box.h)); ++y)
      for (int x = std::max(0, x0); x < std::min(w, x0 + static_cast<int>(o.box.w)); ++x)
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<std::uint8_t>(o.color[c]);
  }
  return img;
}

// Per-channel standardisation over H x W.
template <typename T>
Tensor<T> standardize(Tensor<T> x) {
  const auto s = channel_stats(x);
  for (std::size_t c = 0; c < x.dim(0); ++c)
    for (std::size_t y = 0; y < x.dim(1); ++y)
      for (std::size_t i = 0; i < x.dim(2); ++i) x(c, y, i) = (x(c, y, i) - s.mu[c]) / s.sigma[c];
  return x;
}

// Four stride-2 3x3 conv + ReLU stages; each emitted scale is standardised.
template <typename T>
std::vector<Tensor<T>> stem_forward(const Tensor<T>& x, const std::vector<ConvWeights<T>>& stages) {
  std::vector<Tensor<T>> feats;
  Tensor<T> cur = x;
  for (const auto& s : stages) {
    cur = relu(conv2d(cur, s, {2, 1}));
    feats.push_back(standardize(cur));
  }
  return feats;
}

inline std::vector<ConvWeights<double>> random_stem(std::size_t in_ch, std::size_t c, Rng& rng) {
  std::vector<ConvWeights<double>> stages;
  for (int i = 0; i < 4; ++i) stages.push_back(ConvWeights<double>::random(c, i == 0 ? in_ch : c, 3, 3, rng));
  return stages;
}

}  // namespace detail

inline DemoResult run_pipeline_demo(const DemoConfig& cfg) {
  if (cfg.width < 16 || cfg.height < 16) throw DomainError("pipeline-demo needs at least 16x16 frames");
  if (cfg.channels < 1 || cfg.bins < 1 || cfg.objects < 1) throw DomainError("pipeline-demo: bad size settings");
  Rng rng(derive_seed({cfg.seed, 0}));
  DemoResult res;

  // scene
  std::vector<detail::SceneObject> objs;
  for (int i = 0; i < cfg.objects; ++i) {
    detail::SceneObject o;
    o.category = i % 3;
    const double bw = std::round(rng.uniform(0.15, 0.3) * cfg.width), bh = std::round(rng.uniform(0.2, 0.35) * cfg.height);
    o.box = {std::round(rng.uniform(2, cfg.width - bw - 4)), std::round(rng.uniform(2, cfg.height - bh - 4)), bw, bh};
    o.color = {static_cast<int>(rng.uniform(150, 255)), static_cast<int>(rng.uniform(150, 255)),
               static_cast<int>(rng.uniform(150, 255))};
    objs.push_back(o);
  }
  const double dx = 2.0, dy = 1.0;
  res.frame_a = detail::render_scene(cfg.width, cfg.height, objs, 0.0, 0.0);
  res.frame_b = detail::render_scene(cfg.width, cfg.height, objs, dx, dy);
  for (const auto& o : objs) {
    BoxXYWH b{o.box.x + dx, o.box.y + dy, o.box.w, o.box.h};
    res.ground_truth.push_back({0, o.category, b, std::nullopt});
  }

  // events and grid
  res.events = simulate_events(to_gray(res.frame_a), to_gray(res.frame_b), cfg.t_a, cfg.t_b, cfg.sim);
  res.grid = build_voxel_grid(res.events, cfg.bins);
  double pol = 0;
  for (const auto& e : res.events.events) pol += e.p;
  res.checks.push_back({"voxel_mass", std::abs(res.grid.sum() - pol) < 1e-6,
                        std::to_string(res.events.events.size()) + " events"});

  // features
  const auto c = static_cast<std::size_t>(cfg.channels);
  const auto frame_t = image_to_tensor<double>(res.frame_b);
  const auto stem_f = detail::random_stem(3, c, rng);
  const auto stem_e = detail::random_stem(static_cast<std::size_t>(cfg.bins), c, rng);
  const auto feats_f = detail::stem_forward(frame_t, stem_f);
  const auto feats_e = detail::stem_forward(res.grid.data, stem_e);

  std::vector<Tensord> fused;
  double worst_mu = 0, worst_sigma = 0, worst_row = 0;
  for (std::size_t l = 0; l < 4; ++l) {
    const auto w = CafrWeights<double>::gaussian(c, rng);
    const auto cache = cafr_forward_cached(FeaturePair<double>{feats_f[l], feats_e[l]}, w);
    for (const auto* pair : {&cache.att_f, &cache.att_e})
      for (std::size_t i = 0; i < pair->weights.dim(0); ++i) {
        double s = 0;
        for (std::size_t j = 0; j < pair->weights.dim(1); ++j) s += pair->weights(i, j);
        worst_row = std::max(worst_row, std::abs(s - 1.0));
      }
    const auto [out_f, out_e] = split_channels(cache.output, c);
    for (const auto& [out, ref] : {std::pair{&out_f, &cache.enhanced.frame}, std::pair{&out_e, &cache.enhanced.event}}) {
      const auto so = channel_stats(*out), sr = channel_stats(*ref);
      worst_mu = std::max(worst_mu, max_abs_diff(so.mu, sr.mu));
      worst_sigma = std::max(worst_sigma, max_abs_diff(so.sigma, sr.sigma));
    }
    fused.push_back(cache.output);
  }
  res.checks.push_back({"softmax_rows", worst_row < 1e-12, "max |row sum - 1| = " + std::to_string(worst_row)});
  res.checks.push_back({"tafr_mean", worst_mu < 1e-5, "max |dmu| = " + std::to_string(worst_mu)});
  res.checks.push_back({"tafr_sigma", worst_sigma < 1e-4, "max |dsigma| = " + std::to_string(worst_sigma)});

  // pyramid, head, decode
  HeadConfig hc;
  hc.channels = cfg.channels;
  const std::array<std::size_t, 4> in_ch{2 * c, 2 * c, 2 * c, 2 * c};
  const auto fpn_w = FpnWeights<double>::random(in_ch, c, rng);
  const auto pyr = build_fpn(fused, fpn_w, 2);
  const auto head_w = HeadWeights<double>::random(hc, rng);
  const auto head = head_forward(pyr, head_w, hc);
  const auto anchors = pyramid_anchors(pyr, hc);
  res.detections = decode_head(head, anchors, hc, 0, cfg.width, cfg.height);

  bool boxes_ok = true;
  for (const auto& d : res.detections)
    boxes_ok = boxes_ok && d.bbox.w > 0 && d.bbox.h > 0 && d.score && *d.score >= 0 && *d.score <= 1;
  res.checks.push_back({"detections", !res.detections.empty() && boxes_ok,
                        std::to_string(res.detections.size()) + " detections"});

  res.eval = map_coco(res.detections, res.ground_truth);
  res.checks.push_back({"map_range", res.eval.map >= 0 && res.eval.map <= 1 && res.eval.map50 >= 0 && res.eval.map50 <= 1,
                        "mAP " + std::to_string(res.eval.map)});
  return res;
}

}  // namespace evframe
