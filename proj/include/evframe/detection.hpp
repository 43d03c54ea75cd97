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
#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace evframe {

// Label categories of the driving datasets.
enum class Category : int { kCar = 0, kPedestrian = 1, kLargeVehicle = 2 };

inline constexpr std::array<std::string_view, 3> kCategoryNames = {"car", "pedestrian",
                                                                   "large_vehicle"};

// A bbox in top-left + size form, pixels.
struct BoxXYWH {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const noexcept { return w * h; }
  friend bool operator==(const BoxXYWH&, const BoxXYWH&) = default;
};

// One line of a detection / label file. Ground truth has no score.
struct Detection {
  std::int64_t image_id = 0;
  int category_id = 0;
  BoxXYWH bbox;
  std::optional<double> score;

  friend bool operator==(const Detection&, const Detection&) = default;
};

using DetectionSet = std::vector<Detection>;

// Intersection over union of two top-left boxes, in [0, 1].
inline double iou(const BoxXYWH& a, const BoxXYWH& b) noexcept {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  // Areas share the corner arithmetic of the intersection.
  const double area_a = ((a.x + a.w) - a.x) * ((a.y + a.h) - a.y);
  const double area_b = ((b.x + b.w) - b.x) * ((b.y + b.h) - b.y);
  const double uni = area_a + area_b - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

}  // namespace evframe
