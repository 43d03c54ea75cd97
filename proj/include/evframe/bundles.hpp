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

// Weight sets <-> named tensor bundles.

#pragma once

#include <string>

#include "evframe/cafr.hpp"
#include "evframe/detect_head.hpp"
#include "evframe/errors.hpp"
#include "evframe/formats_io.hpp"

namespace evframe {

namespace detail {

inline const Tensorf& bundle_get(const TensorBundle& b, const std::string& name) {
  const auto it = b.find(name);
  if (it == b.end()) throw SchemaError("bundle is missing tensor '" + name + "'");
  return it->second;
}

inline void put_conv(TensorBundle& b, const std::string& prefix, const ConvWeights<float>& w) {
  b[prefix + ".kernel"] = w.kernel;
  b[prefix + ".bias"] = w.bias;
}

inline ConvWeights<float> get_conv(const TensorBundle& b, const std::string& prefix) {
  ConvWeights<float> w;
  w.kernel = bundle_get(b, prefix + ".kernel");
  w.bias = bundle_get(b, prefix + ".bias");
  if (w.kernel.rank() != 4 || w.bias.rank() != 1 || w.bias.dim(0) != w.kernel.dim(0))
    throw ShapeError("conv '" + prefix + "' needs a [O,I,kh,kw] kernel and [O] bias");
  return w;
}

}  // namespace detail

inline TensorBundle to_bundle(const CafrWeights<float>& w, const std::string& prefix = "cafr") {
  TensorBundle b;
  w.for_each([&](const std::string& name, const Tensorf& t) { b[prefix + "." + name] = t; });
  return b;
}

inline CafrWeights<float> cafr_from_bundle(const TensorBundle& b, const std::string& prefix = "cafr") {
  CafrWeights<float> w;
  w.for_each([&](const std::string& name, Tensorf& t) { t = detail::bundle_get(b, prefix + "." + name); });
  w.validate(w.channels());
  return w;
}

inline TensorBundle to_bundle(const FpnWeights<float>& w, const std::string& prefix = "fpn") {
  TensorBundle b;
  for (std::size_t l = 0; l < 4; ++l) {
    detail::put_conv(b, prefix + ".lateral" + std::to_string(l), w.lateral[l]);
    detail::put_conv(b, prefix + ".smooth" + std::to_string(l), w.smooth[l]);
  }
  detail::put_conv(b, prefix + ".p5", w.p5);
  return b;
}

inline FpnWeights<float> fpn_from_bundle(const TensorBundle& b, const std::string& prefix = "fpn") {
  FpnWeights<float> w;
  for (std::size_t l = 0; l < 4; ++l) {
    w.lateral[l] = detail::get_conv(b, prefix + ".lateral" + std::to_string(l));
    w.smooth[l] = detail::get_conv(b, prefix + ".smooth" + std::to_string(l));
  }
  w.p5 = detail::get_conv(b, prefix + ".p5");
  return w;
}

inline TensorBundle to_bundle(const HeadWeights<float>& w, const std::string& prefix = "head") {
  TensorBundle b;
  for (std::size_t i = 0; i < w.cls_convs.size(); ++i)
    detail::put_conv(b, prefix + ".cls" + std::to_string(i), w.cls_convs[i]);
  for (std::size_t i = 0; i < w.reg_convs.size(); ++i)
    detail::put_conv(b, prefix + ".reg" + std::to_string(i), w.reg_convs[i]);
  detail::put_conv(b, prefix + ".cls_out", w.cls_out);
  detail::put_conv(b, prefix + ".reg_out", w.reg_out);
  return b;
}

inline HeadWeights<float> head_from_bundle(const TensorBundle& b, const HeadConfig& cfg,
                                           const std::string& prefix = "head") {
  HeadWeights<float> w;
  for (int i = 0; i < cfg.num_convs; ++i) {
    w.cls_convs.push_back(detail::get_conv(b, prefix + ".cls" + std::to_string(i)));
    w.reg_convs.push_back(detail::get_conv(b, prefix + ".reg" + std::to_string(i)));
  }
  w.cls_out = detail::get_conv(b, prefix + ".cls_out");
  w.reg_out = detail::get_conv(b, prefix + ".reg_out");
  w.validate(cfg);
  return w;
}

inline void merge_into(TensorBundle& dst, const TensorBundle& src) {
  for (const auto& [k, v] : src) dst[k] = v;
}

}  // namespace evframe
