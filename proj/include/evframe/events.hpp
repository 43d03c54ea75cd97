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

#include <cstdint>
#include <vector>

namespace evframe {

// One sensor event: pixel (x, y), timestamp in microseconds, polarity +1 (ON) / -1 (OFF).
struct Event {
  std::int32_t x = 0;
  std::int32_t y = 0;
  std::int64_t t = 0;
  std::int32_t p = 1;

  friend bool operator==(const Event&, const Event&) = default;
};

// Event with sub-pixel coordinates, e.g. after warping into another view.
struct SubpixelEvent {
  double x = 0.0;
  double y = 0.0;
  std::int64_t t = 0;
  std::int32_t p = 1;
};

template <typename E>
struct BasicEventStream {
  int width = 0;
  int height = 0;
  std::vector<E> events;  // non-decreasing t

  bool empty() const noexcept { return events.empty(); }
  std::size_t size() const noexcept { return events.size(); }

  friend bool operator==(const BasicEventStream&, const BasicEventStream&) = default;
};

using EventStream = BasicEventStream<Event>;
using SubpixelEventStream = BasicEventStream<SubpixelEvent>;

}  // namespace evframe
