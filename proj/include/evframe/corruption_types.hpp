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

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace evframe {

enum class CorruptionType : int {
  kGaussianNoise,
  kShotNoise,
  kImpulseNoise,
  kDefocusBlur,
  kGlassBlur,
  kMotionBlur,
  kZoomBlur,
  kFog,
  kSnow,
  kFrost,
  kBrightness,
  kContrast,
  kElastic,
  kPixelate,
  kJpegCompression,
};

inline constexpr int kNumCorruptionTypes = 15;
inline constexpr int kNumSeverities = 5;

inline constexpr std::array<std::string_view, kNumCorruptionTypes> kCorruptionNames = {
    "gaussian_noise", "shot_noise", "impulse_noise", "defocus_blur", "glass_blur",
    "motion_blur",    "zoom_blur",  "fog",           "snow",         "frost",
    "brightness",     "contrast",   "elastic",       "pixelate",     "jpeg_compression"};

enum class CorruptionGroup { kNoise, kBlur, kWeather, kDigital };

inline constexpr CorruptionGroup corruption_group(CorruptionType t) {
  switch (t) {
    case CorruptionType::kGaussianNoise:
    case CorruptionType::kShotNoise:
    case CorruptionType::kImpulseNoise: return CorruptionGroup::kNoise;
    case CorruptionType::kDefocusBlur:
    case CorruptionType::kGlassBlur:
    case CorruptionType::kMotionBlur:
    case CorruptionType::kZoomBlur: return CorruptionGroup::kBlur;
    case CorruptionType::kFog:
    case CorruptionType::kSnow:
    case CorruptionType::kFrost:
    case CorruptionType::kBrightness: return CorruptionGroup::kWeather;
    default: return CorruptionGroup::kDigital;
  }
}

inline constexpr std::string_view corruption_name(CorruptionType t) { return kCorruptionNames[static_cast<int>(t)]; }

inline std::optional<CorruptionType> corruption_from_name(std::string_view name) {
  for (int i = 0; i < kNumCorruptionTypes; ++i)
    if (kCorruptionNames[i] == name) return static_cast<CorruptionType>(i);
  return std::nullopt;
}

}  // namespace evframe
