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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>
#include <vector>

#include "evframe/errors.hpp"
#include "evframe/events.hpp"
#include "evframe/image.hpp"
#include "evframe/rng.hpp"
#include "evframe/tensor.hpp"

namespace evframe {

// Contrast threshold model. Intensities are scaled to [0, 1] before the log.
struct SimConfig {
  double threshold = 0.2;      // C, log-intensity units
  double log_eps = 1.0 / 255;  // added before log
};

// Relative slack on floor(|delta| / C) so that a change of exactly k*C computed
// through two logs still counts as k crossings.
inline constexpr double kCrossingSlack = 1e-9;

// Emits floor(|delta|/C) events per pixel between two grayscale frames, evenly
// spaced in (t_a, t_b]. Output is sorted by t, ties in row-major pixel order.
inline EventStream simulate_events(const Image& frame_a, const Image& frame_b, std::int64_t t_a, std::int64_t t_b,
                                   const SimConfig& cfg) {
  if (frame_a.channels != 1 || frame_b.channels != 1)
    throw ShapeError("simulate_events expects grayscale (P5) frames");
  if (frame_a.width != frame_b.width || frame_a.height != frame_b.height)
    throw ShapeError("simulate_events: frame dims differ");
  if (t_b <= t_a) throw DomainError("simulate_events: t_b must be greater than t_a");
  if (!(cfg.threshold > 0.0)) throw DomainError("simulate_events: threshold must be positive");
  if (!(cfg.log_eps >= 0.0)) throw DomainError("simulate_events: log_eps must be non-negative");

  EventStream stream;
  stream.width = frame_a.width;
  stream.height = frame_a.height;
  const std::int64_t dt = t_b - t_a;
  for (int y = 0; y < frame_a.height; ++y) {
    for (int x = 0; x < frame_a.width; ++x) {
      const double ia = frame_a.at(x, y) / 255.0 + cfg.log_eps;
      const double ib = frame_b.at(x, y) / 255.0 + cfg.log_eps;
      if (ia == ib) continue;
      if (ia <= 0.0 || ib <= 0.0)
        throw DomainError("simulate_events: zero intensity with log_eps = 0 at (" + std::to_string(x) + "," +
                          std::to_string(y) + ")");
      const double delta = std::log(ib) - std::log(ia);
      const auto n = static_cast<std::int64_t>(std::floor(std::abs(delta) / cfg.threshold + kCrossingSlack));
      const std::int32_t p = delta > 0 ? 1 : -1;
      for (std::int64_t k = 1; k <= n; ++k)
        stream.events.push_back({x, y, t_a + (k * dt + n - 1) / n, p});
    }
  }
  std::stable_sort(stream.events.begin(), stream.events.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
  return stream;
}

// Maps timestamps linearly onto [0, B-1]. A stream with t_1 == t_N maps to all zeros.
template <typename E>
std::vector<double> normalize_timestamps(const BasicEventStream<E>& stream, int bins) {
  if (bins < 1) throw DomainError("bins must be >= 1");
  std::vector<double> out(stream.events.size(), 0.0);
  if (stream.events.empty()) return out;
  const std::int64_t t1 = stream.events.front().t;
  const std::int64_t tn = stream.events.back().t;
  if (tn == t1 || bins == 1) return out;
  const double scale = static_cast<double>(bins - 1) / static_cast<double>(tn - t1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<double>(stream.events[i].t - t1) * scale;
    out[i] = std::clamp(out[i], 0.0, static_cast<double>(bins - 1));
  }
  return out;
}

// B x H x W event volume; consumers treat the bins as image channels.
struct VoxelGrid {
  Tensord data;

  VoxelGrid() = default;
  VoxelGrid(int bins, int height, int width)
      : data({static_cast<std::size_t>(bins), static_cast<std::size_t>(height), static_cast<std::size_t>(width)}) {}

  int bins() const { return static_cast<int>(data.dim(0)); }
  int height() const { return static_cast<int>(data.dim(1)); }
  int width() const { return static_cast<int>(data.dim(2)); }

  double& at(int b, int y, int x) { return data(b, y, x); }
  double at(int b, int y, int x) const { return data(b, y, x); }

  double sum() const {
    double s = 0.0;
    for (double v : data.values()) s += v;
    return s;
  }
};

namespace detail {

// Adds `mass` at temporal position t_star with the linear kernel max(0, 1 - |a|).
inline void splat_temporal(VoxelGrid& grid, int y, int x, double t_star, double mass) {
  const int last = grid.bins() - 1;
  const int lo = std::min(static_cast<int>(std::floor(t_star)), last);
  const double frac = t_star - lo;
  grid.at(lo, y, x) += mass * (1.0 - frac);
  if (frac > 0.0) grid.at(lo + 1, y, x) += mass * frac;
}

}  // namespace detail

// Integer events land on their own pixel; sub-pixel events are also split
// bilinearly across the four neighbouring pixels.
template <typename E>
VoxelGrid build_voxel_grid(const BasicEventStream<E>& stream, int bins) {
  if (bins < 1) throw DomainError("bins must be >= 1");
  if (stream.width <= 0 || stream.height <= 0) throw DomainError("stream sensor dims must be positive");
  VoxelGrid grid(bins, stream.height, stream.width);
  const auto t_star = normalize_timestamps(stream, bins);
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const E& e = stream.events[i];
    if (e.p != 1 && e.p != -1) throw DomainError("event " + std::to_string(i) + ": polarity must be -1 or +1");
    if (!(e.x >= 0 && e.y >= 0 && e.x <= stream.width - 1 && e.y <= stream.height - 1))
      throw DomainError("event " + std::to_string(i) + " lies outside the sensor");
    if constexpr (std::is_integral_v<decltype(e.x)>) {
      detail::splat_temporal(grid, e.y, e.x, t_star[i], static_cast<double>(e.p));
    } else {
      const int x0 = static_cast<int>(std::floor(e.x)), y0 = static_cast<int>(std::floor(e.y));
      const double fx = e.x - x0, fy = e.y - y0;
      const double wx[2] = {1.0 - fx, fx}, wy[2] = {1.0 - fy, fy};
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          const double w = wx[dx] * wy[dy];
          if (w == 0.0) continue;
          detail::splat_temporal(grid, y0 + dy, x0 + dx, t_star[i], e.p * w);
        }
    }
  }
  return grid;
}

// Blanks the whole tensor with the given probability; one Bernoulli draw per call.
template <typename T>
Tensor<T> modality_dropout(const Tensor<T>& rgb, double probability, std::uint64_t seed) {
  if (!(probability >= 0.0 && probability <= 1.0)) throw DomainError("dropout probability must lie in [0,1]");
  Rng rng(seed);
  if (rng.bernoulli(probability)) return Tensor<T>::zeros(rgb.dims());
  return rgb;
}

// Grayscale or RGB image as a [C,H,W] tensor in [0,1].
template <typename T = double>
Tensor<T> image_to_tensor(const Image& img) {
  Tensor<T> out({static_cast<std::size_t>(img.channels), static_cast<std::size_t>(img.height),
                 static_cast<std::size_t>(img.width)});
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) out(c, y, x) = static_cast<T>(img.at(x, y, c) / 255.0);
  return out;
}

}  // namespace evframe
