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
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evframe/errors.hpp"

namespace evframe {

using Dims = std::vector<std::size_t>;

inline std::string dims_to_string(const Dims& d) {
  std::string s = "[";
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(d[i]);
  }
  return s + "]";
}

inline std::size_t dims_product(const Dims& d) {
  return std::accumulate(d.begin(), d.end(), std::size_t{1}, std::multiplies<>());
}

// Dense row-major array of rank 1..4, last dimension fastest.
template <typename T>
class Tensor {
 public:
  using value_type = T;
  static constexpr std::size_t kMaxRank = 4;

  Tensor() = default;

  explicit Tensor(Dims dims, T fill = T{}) : dims_(std::move(dims)) {
    check_rank();
    values_.assign(dims_product(dims_), fill);
  }

  Tensor(Dims dims, std::vector<T> values) : dims_(std::move(dims)), values_(std::move(values)) {
    check_rank();
    if (values_.size() != dims_product(dims_))
      throw ShapeError("tensor value count " + std::to_string(values_.size()) +
                       " does not match dims " + dims_to_string(dims_));
  }

  static Tensor zeros(Dims dims) { return Tensor(std::move(dims), T{0}); }

  const Dims& dims() const noexcept { return dims_; }
  std::size_t dim(std::size_t i) const { return dims_.at(i); }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }
  T* data() noexcept { return values_.data(); }
  const T* data() const noexcept { return values_.data(); }

  T& operator[](std::size_t i) noexcept { return values_[i]; }
  const T& operator[](std::size_t i) const noexcept { return values_[i]; }

  T& operator()(std::size_t i, std::size_t j) noexcept { return values_[i * dims_[1] + j]; }
  const T& operator()(std::size_t i, std::size_t j) const noexcept {
    return values_[i * dims_[1] + j];
  }
  T& operator()(std::size_t i, std::size_t j, std::size_t k) noexcept {
    return values_[(i * dims_[1] + j) * dims_[2] + k];
  }
  const T& operator()(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return values_[(i * dims_[1] + j) * dims_[2] + k];
  }
  T& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) noexcept {
    return values_[((i * dims_[1] + j) * dims_[2] + k) * dims_[3] + l];
  }
  const T& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const noexcept {
    return values_[((i * dims_[1] + j) * dims_[2] + k) * dims_[3] + l];
  }

  Tensor reshaped(Dims dims) const {
    if (dims_product(dims) != size())
      throw ShapeError("cannot reshape " + dims_to_string(dims_) + " to " + dims_to_string(dims));
    return Tensor(std::move(dims), values_);
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(values_.begin(), values_.end());
    return Tensor<U>(dims_, std::move(out));
  }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](T v) { return std::isfinite(v); });
  }

  void fill(T v) { std::fill(values_.begin(), values_.end(), v); }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.dims_ == b.dims_ && a.values_ == b.values_;
  }

 private:
  void check_rank() const {
    if (dims_.empty() || dims_.size() > kMaxRank)
      throw ShapeError("tensor rank must be 1..4, got " + std::to_string(dims_.size()));
  }

  Dims dims_;
  std::vector<T> values_;
};

using Tensord = Tensor<double>;
using Tensorf = Tensor<float>;

template <typename T>
void require_same_dims(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  if (a.dims() != b.dims())
    throw ShapeError(std::string(what) + ": dims " + dims_to_string(a.dims()) + " vs " +
                     dims_to_string(b.dims()));
}

template <typename T>
Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_dims(a, b, "add");
  Tensor<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

template <typename T>
Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_dims(a, b, "subtract");
  Tensor<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

template <typename T>
Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_dims(a, b, "multiply");
  Tensor<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

template <typename T>
Tensor<T> scaled(const Tensor<T>& a, T s) {
  Tensor<T> out = a;
  for (auto& v : out.values()) v *= s;
  return out;
}

template <typename T>
T dot(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_dims(a, b, "dot");
  T acc{0};
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_dims(a, b, "max_abs_diff");
  T m{0};
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// [C,H,W] feature map <-> [H*W, C] token matrix.
template <typename T>
Tensor<T> to_tokens(const Tensor<T>& chw) {
  if (chw.rank() != 3) throw ShapeError("to_tokens expects [C,H,W], got " + dims_to_string(chw.dims()));
  const std::size_t c = chw.dim(0), n = chw.dim(1) * chw.dim(2);
  Tensor<T> out({n, c});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t p = 0; p < n; ++p) out(p, ch) = chw[ch * n + p];
  return out;
}

template <typename T>
Tensor<T> from_tokens(const Tensor<T>& tokens, std::size_t h, std::size_t w) {
  if (tokens.rank() != 2 || tokens.dim(0) != h * w)
    throw ShapeError("from_tokens: token matrix " + dims_to_string(tokens.dims()) +
                     " does not fit " + std::to_string(h) + "x" + std::to_string(w));
  const std::size_t c = tokens.dim(1), n = h * w;
  Tensor<T> out({c, h, w});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t p = 0; p < n; ++p) out[ch * n + p] = tokens(p, ch);
  return out;
}

// Channel concatenation of two [C,H,W] maps with equal spatial dims.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2))
    throw ShapeError("concat_channels: " + dims_to_string(a.dims()) + " vs " + dims_to_string(b.dims()));
  Tensor<T> out({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
  std::copy(a.values().begin(), a.values().end(), out.values().begin());
  std::copy(b.values().begin(), b.values().end(), out.values().begin() + a.size());
  return out;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& x, std::size_t first) {
  if (x.rank() != 3 || first > x.dim(0)) throw ShapeError("split_channels: bad split");
  const std::size_t plane = x.dim(1) * x.dim(2);
  Tensor<T> a({first, x.dim(1), x.dim(2)});
  Tensor<T> b({x.dim(0) - first, x.dim(1), x.dim(2)});
  if (first) std::copy_n(x.data(), first * plane, a.data());
  if (x.dim(0) - first) std::copy_n(x.data() + first * plane, b.size(), b.data());
  return {std::move(a), std::move(b)};
}

}  // namespace evframe
