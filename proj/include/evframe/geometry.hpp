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
#include <optional>

#include <Eigen/Dense>

#include "evframe/detection.hpp"
#include "evframe/errors.hpp"
#include "evframe/image.hpp"

namespace evframe {

inline constexpr double kOrthonormalTolerance = 1e-6;
inline constexpr double kSingularTolerance = 1e-12;

// Intrinsics and rectifying rotations of the RGB / event camera pair.
struct CameraRig {
  Eigen::Matrix3d K_rgb = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d K_event = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d R_rgb = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d R_event = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d R_event_rgb = Eigen::Matrix3d::Identity();
};

inline double orthonormality_error(const Eigen::Matrix3d& r) {
  return (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

// Throws ValidationError naming the first offending member.
inline void validate_rig(const CameraRig& rig) {
  const std::pair<const char*, const Eigen::Matrix3d*> rotations[] = {
      {"R_rgb", &rig.R_rgb}, {"R_event", &rig.R_event}, {"R_event_rgb", &rig.R_event_rgb}};
  for (const auto& [name, r] : rotations) {
    if (!r->allFinite()) throw ValidationError(std::string(name) + " has non-finite entries");
    if (orthonormality_error(*r) > kOrthonormalTolerance)
      throw ValidationError(std::string(name) + " is not orthonormal (max |R^T R - I| = " +
                            std::to_string(orthonormality_error(*r)) + ")");
  }
  const std::pair<const char*, const Eigen::Matrix3d*> intrinsics[] = {{"K_rgb", &rig.K_rgb},
                                                                       {"K_event", &rig.K_event}};
  for (const auto& [name, k] : intrinsics) {
    const auto& m = *k;
    if (!m.allFinite()) throw ValidationError(std::string(name) + " has non-finite entries");
    if (m(1, 0) != 0.0 || m(2, 0) != 0.0 || m(2, 1) != 0.0)
      throw ValidationError(std::string(name) + " is not upper-triangular");
    for (int i = 0; i < 3; ++i)
      if (!(m(i, i) > 0.0))
        throw ValidationError(std::string(name) + " diagonal entry " + std::to_string(i) +
                              " must be positive");
  }
}

// Nonsingular 3x3 projective map acting on homogeneous pixel coordinates.
class Homography {
 public:
  Homography() : m_(Eigen::Matrix3d::Identity()) {}
  explicit Homography(const Eigen::Matrix3d& m) : m_(m) {
    if (!m.allFinite() || std::abs(m.determinant()) <= kSingularTolerance)
      throw InversionError("homography is singular (|det| <= 1e-12)");
  }

  const Eigen::Matrix3d& matrix() const noexcept { return m_; }
  double determinant() const { return m_.determinant(); }
  Homography inverse() const { return Homography(m_.inverse()); }

  // (a * b) applies b first.
  friend Homography operator*(const Homography& a, const Homography& b) {
    return Homography(a.m_ * b.m_);
  }

  static Homography scale(double s) { return Homography(Eigen::Vector3d(s, s, 1.0).asDiagonal()); }
  static Homography translation(double tx, double ty) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(0, 2) = tx;
    m(1, 2) = ty;
    return Homography(m);
  }

 private:
  Eigen::Matrix3d m_;
};

// Factor order of the RGB->event rotation homography.
//   kAsPrinted:    K_event * R_rgb   * R_event_rgb * R_event^T * K_rgb^-1
//   kConventional: K_event * R_event * R_event_rgb * R_rgb^T   * K_rgb^-1
enum class CompositionOrder { kAsPrinted, kConventional };

inline Homography compose_homography(const CameraRig& rig,
                                     CompositionOrder order = CompositionOrder::kAsPrinted) {
  if (!rig.K_rgb.allFinite() || std::abs(rig.K_rgb.determinant()) <= kSingularTolerance)
    throw InversionError("K_rgb is singular");
  const Eigen::Matrix3d k_rgb_inv = rig.K_rgb.inverse();
  Eigen::Matrix3d p;
  if (order == CompositionOrder::kAsPrinted)
    p = rig.K_event * rig.R_rgb * rig.R_event_rgb * rig.R_event.transpose() * k_rgb_inv;
  else
    p = rig.K_event * rig.R_event * rig.R_event_rgb * rig.R_rgb.transpose() * k_rgb_inv;
  return Homography(p);
}

inline Eigen::Vector2d warp_point(const Homography& h, const Eigen::Vector2d& u) {
  const Eigen::Vector3d q = h.matrix() * Eigen::Vector3d(u.x(), u.y(), 1.0);
  if (std::abs(q.z()) <= kSingularTolerance) throw DomainError("point maps to infinity under homography");
  return {q.x() / q.z(), q.y() / q.z()};
}

enum class Interpolation { kBilinear, kNearest };

// Inverse-mapped resampling: output pixel (u, v) reads src at H^-1 (u, v, 1).
// Samples outside the source extent are 0.
inline Image warp_image(const Homography& h, const Image& src, int out_w, int out_h,
                        Interpolation interp = Interpolation::kBilinear) {
  if (out_w <= 0 || out_h <= 0) throw DomainError("warp_image output dims must be positive");
  const Eigen::Matrix3d inv = h.inverse().matrix();
  Image out(out_w, out_h, src.channels, 0);
  const double max_x = src.width - 1, max_y = src.height - 1;
  for (int v = 0; v < out_h; ++v) {
    for (int u = 0; u < out_w; ++u) {
      const Eigen::Vector3d q = inv * Eigen::Vector3d(u, v, 1.0);
      if (std::abs(q.z()) <= kSingularTolerance) continue;
      const double sx = q.x() / q.z(), sy = q.y() / q.z();
      if (interp == Interpolation::kNearest) {
        const double rx = std::floor(sx + 0.5), ry = std::floor(sy + 0.5);
        if (rx < 0 || ry < 0 || rx > max_x || ry > max_y) continue;
        for (int c = 0; c < src.channels; ++c)
          out.at(u, v, c) = src.at(static_cast<int>(rx), static_cast<int>(ry), c);
        continue;
      }
      if (!(sx >= 0.0 && sy >= 0.0 && sx <= max_x && sy <= max_y)) continue;
      const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
      const double fx = sx - x0, fy = sy - y0;
      const int x1 = std::min(x0 + 1, src.width - 1), y1 = std::min(y0 + 1, src.height - 1);
      for (int c = 0; c < src.channels; ++c) {
        const double top = (1.0 - fx) * src.at(x0, y0, c) + fx * src.at(x1, y0, c);
        const double bottom = (1.0 - fx) * src.at(x0, y1, c) + fx * src.at(x1, y1, c);
        out.at(u, v, c) = clamp_to_byte((1.0 - fy) * top + fy * bottom);
      }
    }
  }
  return out;
}

// Axis-aligned hull of the four warped corners, clipped to [0, clip_w] x [0, clip_h].
// Returns nullopt when nothing with positive area survives clipping.
inline std::optional<BoxXYWH> warp_bbox(const Homography& h, const BoxXYWH& box, double clip_w,
                                        double clip_h) {
  const Eigen::Vector2d corners[] = {{box.x, box.y},
                                     {box.x + box.w, box.y},
                                     {box.x, box.y + box.h},
                                     {box.x + box.w, box.y + box.h}};
  double x0 = INFINITY, y0 = INFINITY, x1 = -INFINITY, y1 = -INFINITY;
  for (const auto& c : corners) {
    const Eigen::Vector2d p = warp_point(h, c);
    x0 = std::min(x0, p.x());
    y0 = std::min(y0, p.y());
    x1 = std::max(x1, p.x());
    y1 = std::max(y1, p.y());
  }
  x0 = std::clamp(x0, 0.0, clip_w);
  x1 = std::clamp(x1, 0.0, clip_w);
  y0 = std::clamp(y0, 0.0, clip_h);
  y1 = std::clamp(y1, 0.0, clip_h);
  if (!(x1 > x0) || !(y1 > y0)) return std::nullopt;
  return BoxXYWH{x0, y0, x1 - x0, y1 - y0};
}

}  // namespace evframe
