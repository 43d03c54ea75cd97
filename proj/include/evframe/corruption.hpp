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

// Image corruptions for robustness evaluation: 15 types x 5 severities.
//
// Every corruption works on [0,1] float planes and clamps/rounds back to 8-bit.
// Output is a pure function of (image, type, severity, seed). Parameter tables
// are tuned for driving frames at event-sensor resolution (a few hundred pixels
// wide or less); they are not bit-compatible with any published benchmark.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "evframe/corruption_types.hpp"
#include "evframe/errors.hpp"
#include "evframe/formats_io.hpp"
#include "evframe/image.hpp"
#include "evframe/rng.hpp"

namespace evframe {

struct CorruptionSpec {
  CorruptionType type = CorruptionType::kGaussianNoise;
  int severity = 1;
  std::uint64_t seed = 0;
};

// Up to three named parameters per corruption type. `direction` gives, per
// parameter, whether larger (+1) or smaller (-1) values degrade more; 0 marks
// a parameter held constant across severities.
struct CorruptionParams {
  std::array<double, 3> values{};
  std::size_t count = 0;

  double operator[](std::size_t i) const { return values[i]; }
};

struct ParamSchema {
  std::array<const char*, 3> names{};
  std::array<int, 3> direction{};
  std::size_t count = 0;
};

inline const ParamSchema& param_schema(CorruptionType t) {
  static const std::array<ParamSchema, kNumCorruptionTypes> schemas = {{
      {{"sigma"}, {+1}, 1},                                        // gaussian_noise
      {{"photons"}, {-1}, 1},                                      // shot_noise
      {{"rate"}, {+1}, 1},                                         // impulse_noise
      {{"radius", "alias_sigma"}, {+1, 0}, 2},                     // defocus_blur
      {{"sigma", "max_delta", "iterations"}, {+1, +1, +1}, 3},     // glass_blur
      {{"length"}, {+1}, 1},                                       // motion_blur
      {{"max_zoom", "zoom_step"}, {+1, 0}, 2},                     // zoom_blur
      {{"intensity", "decay"}, {+1, -1}, 2},                       // fog
      {{"density", "streak", "whiten"}, {+1, +1, +1}, 3},          // snow
      {{"frost_weight", "image_weight"}, {+1, -1}, 2},             // frost
      {{"lift"}, {+1}, 1},                                         // brightness
      {{"factor"}, {-1}, 1},                                       // contrast
      {{"amplitude", "smoothing"}, {+1, 0}, 2},                    // elastic
      {{"factor"}, {+1}, 1},                                       // pixelate
      {{"quality"}, {-1}, 1},                                      // jpeg_compression
  }};
  return schemas[static_cast<std::size_t>(t)];
}

// Severity table, rows are severities 1..5.
inline const std::array<std::array<CorruptionParams, kNumSeverities>, kNumCorruptionTypes>& severity_table() {
  using P = CorruptionParams;
  static const std::array<std::array<P, kNumSeverities>, kNumCorruptionTypes> table = {{
      // gaussian_noise: additive N(0, sigma^2)
      {{P{{0.04}, 1}, P{{0.08}, 1}, P{{0.12}, 1}, P{{0.18}, 1}, P{{0.26}, 1}}},
      // shot_noise: Poisson(photons * x) / photons
      {{P{{60}, 1}, P{{25}, 1}, P{{12}, 1}, P{{5}, 1}, P{{3}, 1}}},
      // impulse_noise: salt-and-pepper rate per channel sample
      {{P{{0.03}, 1}, P{{0.06}, 1}, P{{0.09}, 1}, P{{0.17}, 1}, P{{0.27}, 1}}},
      // defocus_blur: disk radius (px), alias smoothing of the disk
      {{P{{1.0, 0.5}, 2}, P{{1.5, 0.5}, 2}, P{{2.0, 0.5}, 2}, P{{3.0, 0.5}, 2}, P{{4.0, 0.5}, 2}}},
      // glass_blur: blur sigma, max pixel displacement, shuffle passes
      {{P{{0.5, 1, 1}, 3}, P{{0.6, 1, 2}, 3}, P{{0.7, 2, 2}, 3}, P{{0.8, 2, 3}, 3}, P{{1.0, 3, 3}, 3}}},
      // motion_blur: line kernel length (px)
      {{P{{3}, 1}, P{{5}, 1}, P{{7}, 1}, P{{9}, 1}, P{{12}, 1}}},
      // zoom_blur: largest zoom factor, zoom increment
      {{P{{1.06, 0.01}, 2}, P{{1.11, 0.01}, 2}, P{{1.16, 0.01}, 2}, P{{1.21, 0.01}, 2}, P{{1.26, 0.01}, 2}}},
      // fog: plasma intensity, roughness decay
      {{P{{0.5, 2.0}, 2}, P{{0.8, 1.9}, 2}, P{{1.1, 1.8}, 2}, P{{1.5, 1.7}, 2}, P{{2.0, 1.6}, 2}}},
      // snow: flake density, streak length (px), whitening of the scene
      {{P{{0.02, 3, 0.10}, 3}, P{{0.035, 4, 0.15}, 3}, P{{0.05, 5, 0.20}, 3}, P{{0.07, 6, 0.25}, 3},
        P{{0.09, 7, 0.30}, 3}}},
      // frost: overlay weight, scene weight
      {{P{{0.40, 1.00}, 2}, P{{0.50, 0.85}, 2}, P{{0.60, 0.75}, 2}, P{{0.65, 0.70}, 2}, P{{0.75, 0.60}, 2}}},
      // brightness: additive lift
      {{P{{0.1}, 1}, P{{0.2}, 1}, P{{0.3}, 1}, P{{0.4}, 1}, P{{0.5}, 1}}},
      // contrast: scale about the channel mean
      {{P{{0.4}, 1}, P{{0.3}, 1}, P{{0.2}, 1}, P{{0.1}, 1}, P{{0.05}, 1}}},
      // elastic: displacement amplitude and smoothing sigma, as fractions of min(H, W)
      {{P{{0.02, 0.06}, 2}, P{{0.035, 0.06}, 2}, P{{0.05, 0.06}, 2}, P{{0.065, 0.06}, 2}, P{{0.08, 0.06}, 2}}},
      // pixelate: downscale factor
      {{P{{2.0}, 1}, P{{3.0}, 1}, P{{4.0}, 1}, P{{5.0}, 1}, P{{6.0}, 1}}},
      // jpeg_compression: quality
      {{P{{25}, 1}, P{{18}, 1}, P{{15}, 1}, P{{10}, 1}, P{{7}, 1}}},
  }};
  return table;
}

inline CorruptionParams severity_params(CorruptionType t, int severity) {
  if (severity < 1 || severity > kNumSeverities)
    throw DomainError("severity must lie in [1,5], got " + std::to_string(severity));
  return severity_table()[static_cast<std::size_t>(t)][static_cast<std::size_t>(severity - 1)];
}

// ---------------------------------------------------------------------------
// Float planes

struct Planes {
  int width = 0, height = 0, channels = 0;
  std::vector<double> v;  // [c][y][x]

  Planes() = default;
  Planes(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c), v(static_cast<std::size_t>(w) * h * c, fill) {}

  double& at(int c, int y, int x) { return v[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return v[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double* plane(int c) { return v.data() + static_cast<std::size_t>(c) * height * width; }
  const double* plane(int c) const { return v.data() + static_cast<std::size_t>(c) * height * width; }
};

inline Planes to_planes(const Image& img) {
  Planes p(img.width, img.height, img.channels);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) p.at(c, y, x) = img.at(x, y, c) / 255.0;
  return p;
}

inline Image to_image(const Planes& p) {
  Image img(p.width, p.height, p.channels);
  for (int c = 0; c < p.channels; ++c)
    for (int y = 0; y < p.height; ++y)
      for (int x = 0; x < p.width; ++x) img.at(x, y, c) = clamp_to_byte(p.at(c, y, x) * 255.0);
  return img;
}

namespace detail {

inline int reflect_index(int i, int n) {
  if (i >= 0 && i < n) return i;
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

inline double sample_bilinear_reflect(const Planes& p, int c, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0, fy = y - y0;
  if (x0 >= 0 && y0 >= 0 && x0 + 1 < p.width && y0 + 1 < p.height) {
    const double* r0 = p.v.data() + (static_cast<std::size_t>(c) * p.height + y0) * p.width + x0;
    const double* r1 = r0 + p.width;
    return (1 - fy) * ((1 - fx) * r0[0] + fx * r0[1]) + fy * ((1 - fx) * r1[0] + fx * r1[1]);
  }
  auto px = [&](int xx, int yy) {
    return p.at(c, reflect_index(yy, p.height), reflect_index(xx, p.width));
  };
  const double top = (1 - fx) * px(x0, y0) + fx * px(x0 + 1, y0);
  const double bot = (1 - fx) * px(x0, y0 + 1) + fx * px(x0 + 1, y0 + 1);
  return (1 - fy) * top + fy * bot;
}

// Dense kernel, odd size, centred.
struct Kernel2d {
  int size = 1;
  std::vector<double> w;
  double& at(int y, int x) { return w[static_cast<std::size_t>(y) * size + x]; }
  double at(int y, int x) const { return w[static_cast<std::size_t>(y) * size + x]; }
  void normalize() {
    double s = 0;
    for (double v : w) s += v;
    if (s > 0)
      for (double& v : w) v /= s;
  }
};

inline Planes convolve(const Planes& src, const Kernel2d& k) {
  Planes out(src.width, src.height, src.channels);
  const int r = k.size / 2;
  std::vector<int> col(static_cast<std::size_t>(src.width + 2 * r));
  for (int i = 0; i < static_cast<int>(col.size()); ++i) col[static_cast<std::size_t>(i)] = reflect_index(i - r, src.width);
  struct Tap {
    int ky, kx;
    double w;
  };
  std::vector<Tap> taps;
  for (int ky = 0; ky < k.size; ++ky)
    for (int kx = 0; kx < k.size; ++kx)
      if (k.at(ky, kx) != 0.0) taps.push_back({ky, kx, k.at(ky, kx)});
  for (int c = 0; c < src.channels; ++c)
    for (int y = 0; y < src.height; ++y) {
      double* dst = &out.at(c, y, 0);
      for (const Tap& t : taps) {
        const double* row = src.v.data() + (static_cast<std::size_t>(c) * src.height +
                                            static_cast<std::size_t>(reflect_index(y + t.ky - r, src.height))) *
                                               static_cast<std::size_t>(src.width);
        const int* ci = col.data() + t.kx;
        for (int x = 0; x < src.width; ++x) dst[x] += t.w * row[ci[x]];
      }
    }
  return out;
}

inline std::vector<double> gaussian_taps(double sigma) {
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> taps(2 * r + 1);
  double s = 0;
  for (int i = -r; i <= r; ++i) s += (taps[i + r] = std::exp(-0.5 * i * i / (sigma * sigma)));
  for (double& t : taps) t /= s;
  return taps;
}

inline Planes gaussian_blur(const Planes& src, double sigma) {
  if (sigma <= 0) return src;
  const auto taps = gaussian_taps(sigma);
  const int r = static_cast<int>(taps.size() / 2);
  Planes tmp(src.width, src.height, src.channels), out(src.width, src.height, src.channels);
  for (int c = 0; c < src.channels; ++c) {
    for (int y = 0; y < src.height; ++y)
      for (int x = 0; x < src.width; ++x) {
        double acc = 0;
        for (int i = -r; i <= r; ++i) acc += taps[i + r] * src.at(c, y, reflect_index(x + i, src.width));
        tmp.at(c, y, x) = acc;
      }
    for (int y = 0; y < src.height; ++y)
      for (int x = 0; x < src.width; ++x) {
        double acc = 0;
        for (int i = -r; i <= r; ++i) acc += taps[i + r] * tmp.at(c, reflect_index(y + i, src.height), x);
        out.at(c, y, x) = acc;
      }
  }
  return out;
}

inline Kernel2d disk_kernel(double radius, double alias_sigma) {
  const int r = static_cast<int>(std::ceil(radius + 3 * alias_sigma));
  Kernel2d disk{2 * r + 1, std::vector<double>(static_cast<std::size_t>((2 * r + 1) * (2 * r + 1)), 0.0)};
  for (int y = -r; y <= r; ++y)
    for (int x = -r; x <= r; ++x)
      if (x * x + y * y <= radius * radius) disk.at(y + r, x + r) = 1.0;
  if (alias_sigma > 0) {
    Planes p(disk.size, disk.size, 1);
    p.v = disk.w;
    disk.w = gaussian_blur(p, alias_sigma).v;
  }
  disk.normalize();
  return disk;
}

// Segment of `length` pixels through the kernel centre at angle `theta`.
inline Kernel2d line_kernel(double length, double theta) {
  const int r = static_cast<int>(std::ceil(length / 2.0));
  Kernel2d k{2 * r + 1, std::vector<double>(static_cast<std::size_t>((2 * r + 1) * (2 * r + 1)), 0.0)};
  const int samples = std::max(2, static_cast<int>(std::ceil(length * 4)));
  for (int i = 0; i < samples; ++i) {
    const double s = (static_cast<double>(i) / (samples - 1) - 0.5) * (length - 1);
    const double x = r + s * std::cos(theta), y = r + s * std::sin(theta);
    const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    const double wts[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    const int xs[4] = {x0, x0 + 1, x0, x0 + 1}, ys[4] = {y0, y0, y0 + 1, y0 + 1};
    for (int j = 0; j < 4; ++j)
      if (xs[j] >= 0 && ys[j] >= 0 && xs[j] < k.size && ys[j] < k.size) k.at(ys[j], xs[j]) += wts[j];
  }
  k.normalize();
  return k;
}

// Diamond-square plasma on a toroidal power-of-two grid, normalised to [0,1].
inline std::vector<double> plasma_fractal(int mapsize, double wibble_decay, Rng& rng) {
  std::vector<double> m(static_cast<std::size_t>(mapsize) * mapsize, 0.0);
  auto at = [&](int y, int x) -> double& {
    y = ((y % mapsize) + mapsize) % mapsize;
    x = ((x % mapsize) + mapsize) % mapsize;
    return m[static_cast<std::size_t>(y) * mapsize + x];
  };
  double wibble = 100.0;
  for (int step = mapsize; step >= 2; step /= 2) {
    const int half = step / 2;
    // squares: centre of each square from its four corners
    for (int y = 0; y < mapsize; y += step)
      for (int x = 0; x < mapsize; x += step) {
        const double avg = (at(y, x) + at(y, x + step) + at(y + step, x) + at(y + step, x + step)) / 4.0;
        at(y + half, x + half) = avg + wibble * rng.uniform(-1.0, 1.0);
      }
    // diamonds: edge midpoints from their four neighbours
    for (int y = 0; y < mapsize; y += step)
      for (int x = 0; x < mapsize; x += step) {
        const double c = at(y + half, x + half);
        const double top = (at(y, x) + at(y, x + step) + c + at(y - half, x + half)) / 4.0;
        const double left = (at(y, x) + at(y + step, x) + c + at(y + half, x - half)) / 4.0;
        at(y, x + half) = top + wibble * rng.uniform(-1.0, 1.0);
        at(y + half, x) = left + wibble * rng.uniform(-1.0, 1.0);
      }
    wibble /= wibble_decay;
  }
  const auto [lo, hi] = std::minmax_element(m.begin(), m.end());
  const double mn = *lo, span = *hi - *lo;
  for (double& v : m) v = span > 0 ? (v - mn) / span : 0.0;
  return m;
}

inline void clip01(Planes& p) {
  for (double& v : p.v) v = std::clamp(v, 0.0, 1.0);
}

// Area-average resize to (w, h).
inline Planes resize_area(const Planes& src, int w, int h) {
  Planes out(w, h, src.channels);
  const double sx = static_cast<double>(src.width) / w, sy = static_cast<double>(src.height) / h;
  for (int c = 0; c < src.channels; ++c)
    for (int y = 0; y < h; ++y) {
      const double y0 = y * sy, y1 = (y + 1) * sy;
      for (int x = 0; x < w; ++x) {
        const double x0 = x * sx, x1 = (x + 1) * sx;
        double acc = 0, area = 0;
        for (int yy = static_cast<int>(std::floor(y0)); yy < static_cast<int>(std::ceil(y1)); ++yy) {
          const double wy = std::min(y1, yy + 1.0) - std::max(y0, static_cast<double>(yy));
          if (wy <= 0) continue;
          for (int xx = static_cast<int>(std::floor(x0)); xx < static_cast<int>(std::ceil(x1)); ++xx) {
            const double wx = std::min(x1, xx + 1.0) - std::max(x0, static_cast<double>(xx));
            if (wx <= 0) continue;
            acc += wx * wy * src.at(c, std::min(yy, src.height - 1), std::min(xx, src.width - 1));
            area += wx * wy;
          }
        }
        out.at(c, y, x) = acc / area;
      }
    }
  return out;
}

inline Planes resize_nearest(const Planes& src, int w, int h) {
  Planes out(w, h, src.channels);
  for (int c = 0; c < src.channels; ++c)
    for (int y = 0; y < h; ++y) {
      const int sy = std::min(src.height - 1, static_cast<int>(static_cast<long long>(y) * src.height / h));
      for (int x = 0; x < w; ++x) {
        const int sx = std::min(src.width - 1, static_cast<int>(static_cast<long long>(x) * src.width / w));
        out.at(c, y, x) = src.at(c, sy, sx);
      }
    }
  return out;
}

// ---- JPEG-style 8x8 DCT quantisation roundtrip ----

inline constexpr std::array<int, 64> kLumaQuant = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,  14, 13, 16, 24, 40,  57,
    69, 56, 14, 17, 22,  29,  51,  87,  80, 62, 18, 22, 37,  56,  68,  109, 103, 77, 24, 35, 55, 64,
    81, 104, 113, 92, 49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
inline constexpr std::array<int, 64> kChromaQuant = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99, 24, 26, 56, 99, 99, 99,
    99, 99, 47, 66, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

// IJG quality scaling.
inline std::array<double, 64> scaled_quant(const std::array<int, 64>& base, int quality) {
  quality = std::clamp(quality, 1, 100);
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<double, 64> q{};
  for (int i = 0; i < 64; ++i) q[i] = std::clamp((base[i] * scale + 50) / 100, 1, 255);
  return q;
}

inline const std::array<double, 64>& dct_basis() {
  static const std::array<double, 64> basis = [] {
    std::array<double, 64> b{};
    for (int u = 0; u < 8; ++u)
      for (int x = 0; x < 8; ++x) {
        const double cu = u == 0 ? std::sqrt(0.125) : 0.5;
        b[u * 8 + x] = cu * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
      }
    return b;
  }();
  return basis;
}

// In-place quantise/dequantise of one plane holding values in [0,255] space.
inline void jpeg_plane_roundtrip(std::vector<double>& plane, int w, int h, const std::array<double, 64>& q) {
  const auto& b = dct_basis();
  for (int by = 0; by < h; by += 8)
    for (int bx = 0; bx < w; bx += 8) {
      double blk[64], tmp[64], coef[64];
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
          const int sy = std::min(by + y, h - 1), sx = std::min(bx + x, w - 1);
          blk[y * 8 + x] = plane[static_cast<std::size_t>(sy) * w + sx] - 128.0;
        }
      for (int y = 0; y < 8; ++y)
        for (int u = 0; u < 8; ++u) {
          double acc = 0;
          for (int x = 0; x < 8; ++x) acc += b[u * 8 + x] * blk[y * 8 + x];
          tmp[y * 8 + u] = acc;
        }
      for (int v = 0; v < 8; ++v)
        for (int u = 0; u < 8; ++u) {
          double acc = 0;
          for (int y = 0; y < 8; ++y) acc += b[v * 8 + y] * tmp[y * 8 + u];
          coef[v * 8 + u] = std::round(acc / q[v * 8 + u]) * q[v * 8 + u];
        }
      for (int y = 0; y < 8; ++y)
        for (int u = 0; u < 8; ++u) {
          double acc = 0;
          for (int v = 0; v < 8; ++v) acc += b[v * 8 + y] * coef[v * 8 + u];
          tmp[y * 8 + u] = acc;
        }
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
          if (by + y >= h || bx + x >= w) continue;
          double acc = 0;
          for (int u = 0; u < 8; ++u) acc += b[u * 8 + x] * tmp[y * 8 + u];
          plane[static_cast<std::size_t>(by + y) * w + bx + x] = acc + 128.0;
        }
    }
}

inline Planes jpeg_roundtrip(const Planes& src, int quality) {
  const int w = src.width, h = src.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  Planes out(w, h, src.channels);
  const auto ql = scaled_quant(kLumaQuant, quality), qc = scaled_quant(kChromaQuant, quality);
  if (src.channels == 1) {
    std::vector<double> y(src.plane(0), src.plane(0) + n);
    for (double& v : y) v = std::round(v * 255.0);
    jpeg_plane_roundtrip(y, w, h, ql);
    for (std::size_t i = 0; i < n; ++i) out.v[i] = y[i] / 255.0;
    return out;
  }
  std::vector<double> ly(n), cb(n), cr(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = std::round(src.v[i] * 255.0), g = std::round(src.v[n + i] * 255.0),
                 bl = std::round(src.v[2 * n + i] * 255.0);
    ly[i] = 0.299 * r + 0.587 * g + 0.114 * bl;
    cb[i] = -0.168736 * r - 0.331264 * g + 0.5 * bl + 128.0;
    cr[i] = 0.5 * r - 0.418688 * g - 0.081312 * bl + 128.0;
  }
  jpeg_plane_roundtrip(ly, w, h, ql);
  jpeg_plane_roundtrip(cb, w, h, qc);
  jpeg_plane_roundtrip(cr, w, h, qc);
  for (std::size_t i = 0; i < n; ++i) {
    out.v[i] = (ly[i] + 1.402 * (cr[i] - 128.0)) / 255.0;
    out.v[n + i] = (ly[i] - 0.344136 * (cb[i] - 128.0) - 0.714136 * (cr[i] - 128.0)) / 255.0;
    out.v[2 * n + i] = (ly[i] + 1.772 * (cb[i] - 128.0)) / 255.0;
  }
  return out;
}

// Procedural frost: hexagonal ice crystals with branching arms over a faint haze.
inline std::vector<double> frost_texture(int w, int h, Rng& rng) {
  std::vector<double> tex(static_cast<std::size_t>(w) * h, 0.0);
  auto plot = [&](double x, double y, double v) {
    const int xi = static_cast<int>(std::floor(x)), yi = static_cast<int>(std::floor(y));
    if (xi < 0 || yi < 0 || xi >= w || yi >= h) return;
    double& t = tex[static_cast<std::size_t>(yi) * w + xi];
    t = std::max(t, v);
  };
  auto segment = [&](double x0, double y0, double ang, double len, double v) {
    const int steps = std::max(1, static_cast<int>(len * 2));
    for (int s = 0; s <= steps; ++s) {
      const double d = len * s / steps;
      plot(x0 + d * std::cos(ang), y0 + d * std::sin(ang), v * (1.0 - 0.5 * d / std::max(len, 1e-9)));
    }
  };
  const double scale = std::min(w, h);
  const int crystals = std::max(4, static_cast<int>(w * h / 90));
  for (int i = 0; i < crystals; ++i) {
    const double cx = rng.uniform(0, w), cy = rng.uniform(0, h);
    const double arm = scale * rng.uniform(0.03, 0.12);
    const double rot = rng.uniform(0, std::numbers::pi / 3);
    const double bright = rng.uniform(0.6, 1.0);
    for (int a = 0; a < 6; ++a) {
      const double ang = rot + a * std::numbers::pi / 3;
      segment(cx, cy, ang, arm, bright);
      for (double f : {0.4, 0.7}) {
        const double bx = cx + f * arm * std::cos(ang), by = cy + f * arm * std::sin(ang);
        segment(bx, by, ang + std::numbers::pi / 3, 0.35 * arm, 0.8 * bright);
        segment(bx, by, ang - std::numbers::pi / 3, 0.35 * arm, 0.8 * bright);
      }
    }
  }
  for (double& t : tex) t = std::min(1.0, t + 0.25 * rng.uniform());
  Planes p(w, h, 1);
  p.v = tex;
  return gaussian_blur(p, 0.6).v;
}

}  // namespace detail

// Applies a corruption with explicit parameters (same semantics as the table rows).
inline Image apply_corruption_params(const Image& img, CorruptionType type, const CorruptionParams& prm,
                                     std::uint64_t seed) {
  Rng rng(seed);
  Planes x = to_planes(img);
  const int w = x.width, h = x.height;
  switch (type) {
    case CorruptionType::kGaussianNoise:
      if (prm[0] > 0)
        for (double& v : x.v) v += rng.normal(0.0, prm[0]);
      break;
    case CorruptionType::kShotNoise: {
      const double photons = prm[0];
      if (!(photons > 0)) throw DomainError("shot noise photon count must be positive");
      if (std::isinf(photons)) break;
      for (double& v : x.v) v = static_cast<double>(rng.poisson(std::max(0.0, v) * photons)) / photons;
      break;
    }
    case CorruptionType::kImpulseNoise:
      for (double& v : x.v)
        if (rng.uniform() < prm[0]) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
      break;
    case CorruptionType::kDefocusBlur:
      if (prm[0] > 0) x = detail::convolve(x, detail::disk_kernel(prm[0], prm[1]));
      break;
    case CorruptionType::kGlassBlur: {
      x = detail::gaussian_blur(x, prm[0]);
      const int delta = static_cast<int>(prm[1]);
      const int iterations = static_cast<int>(prm[2]);
      for (int it = 0; it < iterations; ++it)
        for (int y = h - 1; y >= 0; --y)
          for (int xx = w - 1; xx >= 0; --xx) {
            const int dx = static_cast<int>(rng.below(2 * delta + 1)) - delta;
            const int dy = static_cast<int>(rng.below(2 * delta + 1)) - delta;
            const int sx = std::clamp(xx + dx, 0, w - 1), sy = std::clamp(y + dy, 0, h - 1);
            for (int c = 0; c < x.channels; ++c) std::swap(x.at(c, y, xx), x.at(c, sy, sx));
          }
      x = detail::gaussian_blur(x, prm[0]);
      break;
    }
    case CorruptionType::kMotionBlur:
      if (prm[0] > 1) {
        const double theta = rng.uniform(-std::numbers::pi / 4, std::numbers::pi / 4);
        x = detail::convolve(x, detail::line_kernel(prm[0], theta));
      }
      break;
    case CorruptionType::kZoomBlur: {
      const double max_zoom = prm[0], step = prm[1];
      Planes acc = x;
      int n = 1;
      const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
      for (double z = 1.0 + step; z < max_zoom - 1e-12; z += step, ++n)
        for (int c = 0; c < x.channels; ++c)
          for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx)
              acc.at(c, y, xx) += detail::sample_bilinear_reflect(x, c, cx + (xx - cx) / z, cy + (y - cy) / z);
      for (double& v : acc.v) v /= n;
      x = std::move(acc);
      break;
    }
    case CorruptionType::kFog: {
      int mapsize = 2;
      while (mapsize < std::max(w, h)) mapsize *= 2;
      const auto plasma = detail::plasma_fractal(mapsize, prm[1], rng);
      const double max_v = *std::max_element(x.v.begin(), x.v.end());
      const double a = prm[0];
      for (int c = 0; c < x.channels; ++c)
        for (int y = 0; y < h; ++y)
          for (int xx = 0; xx < w; ++xx) {
            double& v = x.at(c, y, xx);
            v = (v + a * plasma[static_cast<std::size_t>(y) * mapsize + xx]) * max_v / (max_v + a);
          }
      break;
    }
    case CorruptionType::kSnow: {
      const double density = prm[0], streak = prm[1], whiten = prm[2];
      Planes flakes(w, h, 1);
      for (double& v : flakes.v) v = rng.uniform() < density ? rng.uniform(0.6, 1.0) : 0.0;
      const double theta = rng.uniform(std::numbers::pi / 3, 2 * std::numbers::pi / 3);
      Planes layer = detail::convolve(flakes, detail::line_kernel(streak, theta));
      for (double& v : layer.v) v = std::min(1.0, v * streak * 0.6);
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
          double gray = 0;
          for (int c = 0; c < x.channels; ++c) gray += x.at(c, y, xx);
          gray /= x.channels;
          for (int c = 0; c < x.channels; ++c) {
            double& v = x.at(c, y, xx);
            v = (1 - whiten) * v + whiten * std::max(v, gray * 1.5 + 0.5);
            v += layer.at(0, y, xx);
          }
        }
      break;
    }
    case CorruptionType::kFrost: {
      const auto tex = detail::frost_texture(w, h, rng);
      for (int c = 0; c < x.channels; ++c)
        for (int y = 0; y < h; ++y)
          for (int xx = 0; xx < w; ++xx) {
            double& v = x.at(c, y, xx);
            v = prm[1] * v + prm[0] * tex[static_cast<std::size_t>(y) * w + xx];
          }
      break;
    }
    case CorruptionType::kBrightness:
      for (double& v : x.v) v += prm[0];
      break;
    case CorruptionType::kContrast:
      for (int c = 0; c < x.channels; ++c) {
        double* p = x.plane(c);
        const std::size_t n = static_cast<std::size_t>(w) * h;
        double mean = 0;
        for (std::size_t i = 0; i < n; ++i) mean += p[i];
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = (p[i] - mean) * prm[0] + mean;
      }
      break;
    case CorruptionType::kElastic: {
      const double size = std::min(w, h);
      Planes field(w, h, 2);
      for (double& v : field.v) v = rng.uniform(-1.0, 1.0);
      field = detail::gaussian_blur(field, std::max(0.5, prm[1] * size));
      double peak = 0;
      for (double v : field.v) peak = std::max(peak, std::abs(v));
      const double amp = peak > 0 ? prm[0] * size / peak : 0.0;
      if (amp == 0.0) break;
      Planes out(w, h, x.channels);
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
          const double sx = xx + amp * field.at(0, y, xx), sy = y + amp * field.at(1, y, xx);
          for (int c = 0; c < x.channels; ++c) out.at(c, y, xx) = detail::sample_bilinear_reflect(x, c, sx, sy);
        }
      x = std::move(out);
      break;
    }
    case CorruptionType::kPixelate: {
      if (!(prm[0] >= 1.0)) throw DomainError("pixelate factor must be >= 1");
      const int dw = std::max(1, static_cast<int>(std::lround(w / prm[0])));
      const int dh = std::max(1, static_cast<int>(std::lround(h / prm[0])));
      if (dw == w && dh == h) break;
      x = detail::resize_nearest(detail::resize_area(x, dw, dh), w, h);
      break;
    }
    case CorruptionType::kJpegCompression:
      x = detail::jpeg_roundtrip(x, static_cast<int>(prm[0]));
      break;
  }
  detail::clip01(x);
  return to_image(x);
}

inline Image apply_corruption(const Image& img, const CorruptionSpec& spec) {
  return apply_corruption_params(img, spec.type, severity_params(spec.type, spec.severity), spec.seed);
}

// ---------------------------------------------------------------------------
// Corpus generation

struct CorruptionManifestRow {
  std::string src;
  std::string dst;
  CorruptionType type{};
  int severity = 1;
  std::uint64_t seed = 0;
};

inline std::uint64_t corruption_seed(std::uint64_t base_seed, std::size_t image_index, CorruptionType type,
                                     int severity) {
  return derive_seed({base_seed, image_index, static_cast<std::uint64_t>(type), static_cast<std::uint64_t>(severity)});
}

inline std::string encode_corruption_manifest(const std::vector<CorruptionManifestRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["src"] = r.src;
    j["dst"] = r.dst;
    j["type"] = std::string(corruption_name(r.type));
    j["severity"] = r.severity;
    j["seed"] = r.seed;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

inline std::vector<CorruptionManifestRow> decode_corruption_manifest(std::string_view text) {
  std::vector<CorruptionManifestRow> rows;
  const auto lines = detail::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      const auto j = nlohmann::json::parse(lines[i]);
      CorruptionManifestRow r;
      r.src = j.at("src").get<std::string>();
      r.dst = j.at("dst").get<std::string>();
      const auto t = corruption_from_name(j.at("type").get<std::string>());
      if (!t) throw ParseError("unknown corruption type", i + 1);
      r.type = *t;
      r.severity = j.at("severity").get<int>();
      r.seed = j.at("seed").get<std::uint64_t>();
      rows.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("manifest record: ") + e.what(), i + 1);
    }
  }
  return rows;
}

// Writes every (type, severity) variant of every input image into out_dir plus
// out_dir/manifest.jsonl. Work is spread over `threads` workers; the output
// bytes do not depend on the thread count.
inline std::vector<CorruptionManifestRow> corrupt_dataset(const std::vector<std::filesystem::path>& images,
                                                          const std::filesystem::path& out_dir,
                                                          std::uint64_t base_seed, unsigned threads = 1) {
  if (images.empty()) throw DomainError("corrupt_dataset needs at least one image");
  std::filesystem::create_directories(out_dir);
  std::vector<Image> loaded;
  loaded.reserve(images.size());
  for (const auto& p : images) loaded.push_back(decode_pnm(read_file(p)));

  std::vector<CorruptionManifestRow> rows;
  for (std::size_t i = 0; i < images.size(); ++i)
    for (int t = 0; t < kNumCorruptionTypes; ++t)
      for (int s = 1; s <= kNumSeverities; ++s) {
        const auto type = static_cast<CorruptionType>(t);
        const std::string ext = loaded[i].channels == 1 ? ".pgm" : ".ppm";
        const std::string name = std::to_string(i) + "_" + images[i].stem().string() + "__" +
                                 std::string(corruption_name(type)) + "__s" + std::to_string(s) + ext;
        rows.push_back({images[i].string(), (out_dir / name).string(), type, s,
                        corruption_seed(base_seed, i, type, s)});
      }

  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::vector<std::string> failures;
  auto worker = [&] {
    for (std::size_t k = next++; k < rows.size(); k = next++) {
      const auto& r = rows[k];
      const std::size_t img = k / (kNumCorruptionTypes * kNumSeverities);
      try {
        write_file(r.dst, encode_pnm(apply_corruption(loaded[img], {r.type, r.severity, r.seed})));
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mu);
        failures.push_back(r.dst + ": " + e.what());
      }
    }
  };
  threads = std::max(1u, threads);
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (!failures.empty()) {
    std::sort(failures.begin(), failures.end());
    std::string msg = std::to_string(failures.size()) + " corrupted file(s) failed:";
    for (const auto& f : failures) msg += "\n  " + f;
    throw IoError(msg);
  }
  write_file(out_dir / "manifest.jsonl", encode_corruption_manifest(rows));
  return rows;
}

}  // namespace evframe
