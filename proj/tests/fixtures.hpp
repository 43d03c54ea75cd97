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

#include "evframe/image.hpp"
#include "evframe/rng.hpp"

namespace fixture {

// Gradient, stripes, a few flat rectangles and mild sensor noise.
inline evframe::Image synthetic_scene(int w, int h, int channels, evframe::Rng& rng) {
  evframe::Image img(w, h, channels);
  const double gx = rng.uniform(-1, 1), gy = rng.uniform(-1, 1), freq = rng.uniform(0.05, 0.3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        img.at(x, y, c) = evframe::clamp_to_byte(128 + 60 * (gx * x / w + gy * y / h) +
                                                 20 * std::sin(freq * x + c) + rng.normal(0, 3));
  for (int k = 0; k < 8; ++k) {
    const int bw = 3 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, w / 6))));
    const int bh = 3 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, h / 6))));
    const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(w)));
    const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(h)));
    std::uint8_t col[3];
    for (auto& v : col) v = static_cast<std::uint8_t>(rng.below(256));
    for (int y = y0; y < std::min(h, y0 + bh); ++y)
      for (int x = x0; x < std::min(w, x0 + bw); ++x)
        for (int c = 0; c < channels; ++c) img.at(x, y, c) = col[c];
  }
  return img;
}

}  // namespace fixture
