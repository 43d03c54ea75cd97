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

// Feature pyramid, anchors, classification/regression subnets and box decoding.
//
// Pyramid levels keep the P1..P5 numbering used for this architecture:
// P1..P4 come from the four backbone maps (highest resolution first), P5 is a
// stride-2 3x3 conv on P4. With a stride-8 first map these correspond to the
// conventional P3..P7.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "evframe/detection.hpp"
#include "evframe/errors.hpp"
#include "evframe/rng.hpp"
#include "evframe/tensor.hpp"
#include "evframe/tensor_math.hpp"

namespace evframe {

// Center-form box.
struct BBox {
  double x = 0.0;  // center
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  friend bool operator==(const BBox&, const BBox&) = default;
};

inline BBox to_center(const BoxXYWH& b) { return {b.x + 0.5 * b.w, b.y + 0.5 * b.h, b.w, b.h}; }
inline BoxXYWH to_top_left(const BBox& b) { return {b.x - 0.5 * b.w, b.y - 0.5 * b.h, b.w, b.h}; }

struct Anchor {
  BBox box;
  int level = 0;
};

struct OffsetVector {
  double tx = 0.0, ty = 0.0, tw = 0.0, th = 0.0;
};

struct HeadConfig {
  int num_classes = 3;
  int channels = 256;
  int num_convs = 4;
  std::vector<double> scales = {1.0, std::pow(2.0, 1.0 / 3.0), std::pow(2.0, 2.0 / 3.0)};
  std::vector<double> ratios = {0.5, 1.0, 2.0};  // w / h
  double base_size_per_stride = 4.0;
  double score_threshold = 0.05;
  double nms_iou = 0.5;
  std::size_t max_detections = 100;
  std::size_t pre_nms_per_level = 1000;

  int anchors_per_position() const { return static_cast<int>(scales.size() * ratios.size()); }

  void validate() const {
    if (num_classes < 1) throw DomainError("head needs at least one class");
    if (channels < 1 || num_convs < 0) throw DomainError("bad head width / depth");
    if (scales.empty() || ratios.empty()) throw DomainError("anchor scales and ratios must be non-empty");
  }
};

template <typename T>
struct FeaturePyramid {
  std::vector<Tensor<T>> levels;  // P1..P5, [C,H_l,W_l]
  std::vector<int> strides;       // pixels per cell, doubling per level
};

template <typename T>
struct FpnWeights {
  std::array<ConvWeights<T>, 4> lateral;  // 1x1, in_l -> C
  std::array<ConvWeights<T>, 4> smooth;   // 3x3, C -> C
  ConvWeights<T> p5;                      // 3x3 stride 2, C -> C

  static FpnWeights zeros(const std::array<std::size_t, 4>& in_channels, std::size_t c) {
    FpnWeights w;
    for (std::size_t l = 0; l < 4; ++l) {
      w.lateral[l] = ConvWeights<T>(c, in_channels[l], 1, 1);
      w.smooth[l] = ConvWeights<T>(c, c, 3, 3);
    }
    w.p5 = ConvWeights<T>(c, c, 3, 3);
    return w;
  }

  static FpnWeights random(const std::array<std::size_t, 4>& in_channels, std::size_t c, Rng& rng) {
    FpnWeights w;
    for (std::size_t l = 0; l < 4; ++l) {
      w.lateral[l] = ConvWeights<T>::random(c, in_channels[l], 1, 1, rng);
      w.smooth[l] = ConvWeights<T>::random(c, c, 3, 3, rng);
    }
    w.p5 = ConvWeights<T>::random(c, c, 3, 3, rng);
    return w;
  }
};

inline std::size_t ceil_half(std::size_t n) { return (n + 1) / 2; }

// Nearest-neighbour 2x upsampling, cropped to (h, w).
template <typename T>
Tensor<T> upsample2x_nearest(const Tensor<T>& x, std::size_t h, std::size_t w) {
  Tensor<T> out({x.dim(0), h, w});
  for (std::size_t c = 0; c < x.dim(0); ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t xx = 0; xx < w; ++xx) out(c, y, xx) = x(c, std::min(y / 2, x.dim(1) - 1), std::min(xx / 2, x.dim(2) - 1));
  return out;
}

// feats: four backbone maps, each spatially ceil-half of the previous.
// base_stride is the stride of feats[0] relative to the input image.
template <typename T>
FeaturePyramid<T> build_fpn(const std::vector<Tensor<T>>& feats, const FpnWeights<T>& w, int base_stride = 8) {
  if (feats.size() != 4) throw ShapeError("build_fpn expects 4 backbone maps");
  for (std::size_t l = 0; l < 4; ++l) {
    if (feats[l].rank() != 3) throw ShapeError("backbone map must be [C,H,W]");
    if (feats[l].dim(0) != w.lateral[l].in_ch())
      throw ShapeError("backbone map " + std::to_string(l + 1) + " has " + std::to_string(feats[l].dim(0)) +
                       " channels, lateral conv expects " + std::to_string(w.lateral[l].in_ch()));
    if (l > 0 && (feats[l].dim(1) != ceil_half(feats[l - 1].dim(1)) || feats[l].dim(2) != ceil_half(feats[l - 1].dim(2))))
      throw ShapeError("backbone map " + std::to_string(l + 1) + " dims " + dims_to_string(feats[l].dims()) +
                       " are not the ceil-half of the previous level");
  }
  std::array<Tensor<T>, 4> merged;
  merged[3] = conv2d(feats[3], w.lateral[3]);
  for (int l = 2; l >= 0; --l) {
    auto lat = conv2d(feats[l], w.lateral[l]);
    merged[l] = lat + upsample2x_nearest(merged[l + 1], lat.dim(1), lat.dim(2));
  }
  FeaturePyramid<T> pyr;
  for (std::size_t l = 0; l < 4; ++l) {
    pyr.levels.push_back(conv2d(merged[l], w.smooth[l], {1, 1}));
    pyr.strides.push_back(base_stride << l);
  }
  pyr.levels.push_back(conv2d(pyr.levels[3], w.p5, {2, 1}));
  pyr.strides.push_back(base_stride << 4);
  return pyr;
}

// A anchors per cell, cell-major then ratio-major then scale.
inline std::vector<Anchor> gen_anchors(std::size_t level_h, std::size_t level_w, int stride, const HeadConfig& cfg,
                                       int level = 0) {
  if (stride < 1) throw DomainError("anchor stride must be >= 1");
  std::vector<Anchor> out;
  out.reserve(level_h * level_w * cfg.anchors_per_position());
  const double base = cfg.base_size_per_stride * stride;
  for (std::size_t i = 0; i < level_h; ++i)
    for (std::size_t j = 0; j < level_w; ++j) {
      const double cx = (static_cast<double>(j) + 0.5) * stride, cy = (static_cast<double>(i) + 0.5) * stride;
      for (double r : cfg.ratios)
        for (double s : cfg.scales) {
          const double size = base * s, sr = std::sqrt(r);
          out.push_back({{cx, cy, size * sr, size / sr}, level});
        }
    }
  return out;
}

template <typename T>
std::vector<Anchor> pyramid_anchors(const FeaturePyramid<T>& pyr, const HeadConfig& cfg) {
  std::vector<Anchor> all;
  for (std::size_t l = 0; l < pyr.levels.size(); ++l) {
    auto a = gen_anchors(pyr.levels[l].dim(1), pyr.levels[l].dim(2), pyr.strides[l], cfg, static_cast<int>(l));
    all.insert(all.end(), a.begin(), a.end());
  }
  return all;
}

template <typename T>
struct HeadWeights {
  std::vector<ConvWeights<T>> cls_convs, reg_convs;  // 3x3, C -> C
  ConvWeights<T> cls_out;                           // 3x3, C -> K*A
  ConvWeights<T> reg_out;                           // 3x3, C -> 4*A

  static HeadWeights zeros(const HeadConfig& cfg) {
    HeadWeights w;
    const auto c = static_cast<std::size_t>(cfg.channels);
    for (int i = 0; i < cfg.num_convs; ++i) {
      w.cls_convs.emplace_back(c, c, 3, 3);
      w.reg_convs.emplace_back(c, c, 3, 3);
    }
    w.cls_out = ConvWeights<T>(static_cast<std::size_t>(cfg.num_classes * cfg.anchors_per_position()), c, 3, 3);
    w.reg_out = ConvWeights<T>(static_cast<std::size_t>(4 * cfg.anchors_per_position()), c, 3, 3);
    return w;
  }

  static HeadWeights random(const HeadConfig& cfg, Rng& rng) {
    HeadWeights w;
    const auto c = static_cast<std::size_t>(cfg.channels);
    for (int i = 0; i < cfg.num_convs; ++i) w.cls_convs.push_back(ConvWeights<T>::random(c, c, 3, 3, rng));
    for (int i = 0; i < cfg.num_convs; ++i) w.reg_convs.push_back(ConvWeights<T>::random(c, c, 3, 3, rng));
    w.cls_out =
        ConvWeights<T>::random(static_cast<std::size_t>(cfg.num_classes * cfg.anchors_per_position()), c, 3, 3, rng);
    w.reg_out = ConvWeights<T>::random(static_cast<std::size_t>(4 * cfg.anchors_per_position()), c, 3, 3, rng);
    return w;
  }

  void validate(const HeadConfig& cfg) const {
    const auto c = static_cast<std::size_t>(cfg.channels);
    const auto a = static_cast<std::size_t>(cfg.anchors_per_position());
    if (cls_convs.size() != static_cast<std::size_t>(cfg.num_convs) || reg_convs.size() != cls_convs.size())
      throw ShapeError("head conv tower depth does not match config");
    for (const auto* tower : {&cls_convs, &reg_convs})
      for (const auto& cw : *tower)
        if (cw.kernel.dims() != Dims{c, c, 3, 3}) throw ShapeError("head tower conv must be 3x3 C->C");
    if (cls_out.kernel.dims() != Dims{static_cast<std::size_t>(cfg.num_classes) * a, c, 3, 3})
      throw ShapeError("classification output conv must have K*A filters");
    if (reg_out.kernel.dims() != Dims{4 * a, c, 3, 3}) throw ShapeError("regression output conv must have 4*A filters");
  }
};

template <typename T>
Tensor<T> relu(Tensor<T> x) {
  for (auto& v : x.values()) v = std::max(v, T{0});
  return x;
}

// cls: per anchor K sigmoid scores; reg: per anchor 4 offsets. Anchor order
// matches pyramid_anchors.
template <typename T>
struct HeadOutput {
  std::vector<T> cls;
  std::vector<T> reg;
};

template <typename T>
HeadOutput<T> head_forward(const FeaturePyramid<T>& pyr, const HeadWeights<T>& w, const HeadConfig& cfg) {
  cfg.validate();
  w.validate(cfg);
  const std::size_t a_n = static_cast<std::size_t>(cfg.anchors_per_position());
  const std::size_t k_n = static_cast<std::size_t>(cfg.num_classes);
  HeadOutput<T> out;
  for (const auto& level : pyr.levels) {
    if (level.rank() != 3 || level.dim(0) != static_cast<std::size_t>(cfg.channels))
      throw ShapeError("pyramid level must have " + std::to_string(cfg.channels) + " channels");
    Tensor<T> c = level, r = level;
    for (const auto& cw : w.cls_convs) c = relu(conv2d(c, cw, {1, 1}));
    for (const auto& rw : w.reg_convs) r = relu(conv2d(r, rw, {1, 1}));
    const auto logits = conv2d(c, w.cls_out, {1, 1});
    const auto offsets = conv2d(r, w.reg_out, {1, 1});
    const std::size_t h = level.dim(1), wd = level.dim(2);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < wd; ++x)
        for (std::size_t a = 0; a < a_n; ++a) {
          for (std::size_t k = 0; k < k_n; ++k) out.cls.push_back(sigmoid(logits(a * k_n + k, y, x)));
          for (std::size_t j = 0; j < 4; ++j) out.reg.push_back(offsets(a * 4 + j, y, x));
        }
  }
  return out;
}

inline OffsetVector encode_offsets(const Anchor& anchor, const BBox& gt) {
  if (!(gt.w > 0.0) || !(gt.h > 0.0)) throw DomainError("encode_offsets: ground-truth w and h must be positive");
  const BBox& a = anchor.box;
  return {(gt.x - a.x) / a.w, (gt.y - a.y) / a.h, std::log(gt.w / a.w), std::log(gt.h / a.h)};
}

inline BBox decode_offsets(const Anchor& anchor, const OffsetVector& t) {
  if (!std::isfinite(t.tx) || !std::isfinite(t.ty) || !std::isfinite(t.tw) || !std::isfinite(t.th))
    throw DomainError("decode_offsets: non-finite offsets");
  const BBox& a = anchor.box;
  const BBox b{t.tx * a.w + a.x, t.ty * a.h + a.y, a.w * std::exp(t.tw), a.h * std::exp(t.th)};
  if (!std::isfinite(b.w) || !std::isfinite(b.h)) throw DomainError("decode_offsets: exp overflow");
  return b;
}

// Greedy per (image, class) suppression by descending score; equal scores keep input order.
inline DetectionSet nms(const DetectionSet& dets, double iou_threshold) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score.value_or(0) > dets[b].score.value_or(0); });
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    bool suppressed = false;
    for (std::size_t k : kept) {
      if (dets[k].image_id == dets[i].image_id && dets[k].category_id == dets[i].category_id &&
          iou(dets[k].bbox, dets[i].bbox) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(i);
  }
  DetectionSet out;
  out.reserve(kept.size());
  for (std::size_t k : kept) out.push_back(dets[k]);
  return out;
}

// Threshold, decode and clip to the image, then NMS and keep the top max_detections.
template <typename T>
DetectionSet decode_head(const HeadOutput<T>& head, const std::vector<Anchor>& anchors, const HeadConfig& cfg,
                               std::int64_t image_id, double image_w, double image_h) {
  const std::size_t k_n = static_cast<std::size_t>(cfg.num_classes);
  if (head.cls.size() != anchors.size() * k_n || head.reg.size() != anchors.size() * 4)
    throw ShapeError("head output does not match anchor count");
  DetectionSet candidates;
  int level = -1;
  std::size_t level_begin = 0;
  auto cap_level = [&] {
    if (candidates.size() - level_begin <= cfg.pre_nms_per_level) return;
    std::stable_sort(candidates.begin() + static_cast<std::ptrdiff_t>(level_begin), candidates.end(),
                     [](const Detection& a, const Detection& b) { return *a.score > *b.score; });
    candidates.resize(level_begin + cfg.pre_nms_per_level);
  };
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (anchors[i].level != level) {
      cap_level();
      level = anchors[i].level;
      level_begin = candidates.size();
    }
    for (std::size_t k = 0; k < k_n; ++k) {
      const double score = static_cast<double>(head.cls[i * k_n + k]);
      if (score <= cfg.score_threshold) continue;
      const OffsetVector t{static_cast<double>(head.reg[i * 4]), static_cast<double>(head.reg[i * 4 + 1]),
                           static_cast<double>(head.reg[i * 4 + 2]), static_cast<double>(head.reg[i * 4 + 3])};
      const BoxXYWH b = to_top_left(decode_offsets(anchors[i], t));
      const double x0 = std::clamp(b.x, 0.0, image_w), y0 = std::clamp(b.y, 0.0, image_h);
      const double x1 = std::clamp(b.x + b.w, 0.0, image_w), y1 = std::clamp(b.y + b.h, 0.0, image_h);
      if (!(x1 > x0) || !(y1 > y0)) continue;
      candidates.push_back({image_id, static_cast<int>(k), {x0, y0, x1 - x0, y1 - y0}, score});
    }
  }
  cap_level();
  auto kept = nms(candidates, cfg.nms_iou);
  if (kept.size() > cfg.max_detections) kept.resize(cfg.max_detections);
  return kept;
}

}  // namespace evframe
