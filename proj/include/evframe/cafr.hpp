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

// Cross-modality adaptive feature refinement for a frame/event feature pair.
//
//   activate   A_f = conv1x1_f(F_f),           A_e = conv1x1_e(F_e)
//   enhance    E_f = A_f * A_e + A_f,          E_e = A_f * A_e + A_e
//   attend     Ca_f = softmax(Q_e K_e^T / sqrt(C)) V_f
//              Ca_e = softmax(Q_f K_f^T / sqrt(C)) V_e      (Q,K,V = tokens(E) W)
//   refine     F'_f = sigma(E_f) (Ca_f W_f - mu) / sigma(Ca_f W_f) + mu(E_f), likewise for events
//   output     concat(F'_f, F'_e)                           [2C,H,W]
//
// Tokens are the H*W spatial positions, each a C-vector. Statistics are per
// channel over H x W.

#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "evframe/errors.hpp"
#include "evframe/rng.hpp"
#include "evframe/tensor.hpp"
#include "evframe/tensor_math.hpp"

namespace evframe {

template <typename T>
struct FeaturePair {
  Tensor<T> frame;  // [C,H,W]
  Tensor<T> event;  // [C,H,W]
};

template <typename T>
struct CafrWeights {
  ConvWeights<T> conv_f, conv_e;  // 1x1, C -> C
  Tensor<T> wq_f, wk_f, wv_f;     // [C,C]
  Tensor<T> wq_e, wk_e, wv_e;
  Tensor<T> w_f, w_e;

  std::size_t channels() const { return wq_f.dim(0); }

  static CafrWeights zeros(std::size_t c) {
    CafrWeights w;
    w.conv_f = w.conv_e = ConvWeights<T>(c, c, 1, 1);
    w.wq_f = w.wk_f = w.wv_f = w.wq_e = w.wk_e = w.wv_e = w.w_f = w.w_e = Tensor<T>({c, c});
    return w;
  }

  static CafrWeights identity(std::size_t c) {
    CafrWeights w = zeros(c);
    w.conv_f = w.conv_e = ConvWeights<T>::identity(c);
    for (auto* m : {&w.wq_f, &w.wk_f, &w.wv_f, &w.wq_e, &w.wk_e, &w.wv_e, &w.w_f, &w.w_e})
      for (std::size_t i = 0; i < c; ++i) (*m)(i, i) = T{1};
    return w;
  }

  // Uniform in [-1/sqrt(C), 1/sqrt(C)] for every member.
  static CafrWeights random(std::size_t c, Rng& rng) {
    CafrWeights w = zeros(c);
    const double bound = 1.0 / std::sqrt(static_cast<double>(c));
    w.for_each([&](const std::string&, Tensor<T>& t) {
      for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-bound, bound));
    });
    return w;
  }

  // Every entry N(0, stddev^2).
  static CafrWeights gaussian(std::size_t c, Rng& rng, double stddev = 1.0) {
    CafrWeights w = zeros(c);
    w.for_each([&](const std::string&, Tensor<T>& t) {
      for (auto& v : t.values()) v = static_cast<T>(rng.normal(0.0, stddev));
    });
    return w;
  }

  template <typename F>
  void for_each(F&& f) {
    f("conv_f.kernel", conv_f.kernel);
    f("conv_f.bias", conv_f.bias);
    f("conv_e.kernel", conv_e.kernel);
    f("conv_e.bias", conv_e.bias);
    f("wq_f", wq_f);
    f("wk_f", wk_f);
    f("wv_f", wv_f);
    f("wq_e", wq_e);
    f("wk_e", wk_e);
    f("wv_e", wv_e);
    f("w_f", w_f);
    f("w_e", w_e);
  }
  template <typename F>
  void for_each(F&& f) const {
    const_cast<CafrWeights*>(this)->for_each(
        [&](const std::string& name, Tensor<T>& t) { f(name, static_cast<const Tensor<T>&>(t)); });
  }

  void validate(std::size_t c) const {
    if (conv_f.kernel.dims() != Dims{c, c, 1, 1} || conv_e.kernel.dims() != Dims{c, c, 1, 1})
      throw ShapeError("CAFR activation convs must be 1x1 with " + std::to_string(c) + " channels");
    if (conv_f.bias.dims() != Dims{c} || conv_e.bias.dims() != Dims{c})
      throw ShapeError("CAFR activation conv bias must be [C]");
    for (const auto* m : {&wq_f, &wk_f, &wv_f, &wq_e, &wk_e, &wv_e, &w_f, &w_e})
      if (m->dims() != Dims{c, c}) throw ShapeError("CAFR projections must be square [C,C] with C=" + std::to_string(c));
  }

  template <typename U>
  CafrWeights<U> cast() const {
    CafrWeights<U> out;
    out.conv_f = conv_f.template cast<U>();
    out.conv_e = conv_e.template cast<U>();
    out.wq_f = wq_f.template cast<U>();
    out.wk_f = wk_f.template cast<U>();
    out.wv_f = wv_f.template cast<U>();
    out.wq_e = wq_e.template cast<U>();
    out.wk_e = wk_e.template cast<U>();
    out.wv_e = wv_e.template cast<U>();
    out.w_f = w_f.template cast<U>();
    out.w_e = w_e.template cast<U>();
    return out;
  }
};

enum class CafrBranch { kDual, kFrameOnly, kEventOnly };

// Stage switches for ablations. A disabled stage passes its primary input through.
struct CafrOptions {
  bool mul_add = true;
  bool cross_attention = true;
  bool refine = true;
  bool sigmoid_map = false;  // squash A_f * A_e through a sigmoid (experimental)
  CafrBranch branch = CafrBranch::kDual;
  double eps = kStatsEpsilon;
};

namespace detail {

template <typename T>
void require_pair(const FeaturePair<T>& p, const char* what) {
  if (p.frame.rank() != 3) throw ShapeError(std::string(what) + ": features must be [C,H,W]");
  require_same_dims(p.frame, p.event, what);
}

}  // namespace detail

template <typename T>
FeaturePair<T> bci_activate(const FeaturePair<T>& pair, const CafrWeights<T>& w) {
  detail::require_pair(pair, "bci_activate");
  w.validate(pair.frame.dim(0));
  return {conv2d(pair.frame, w.conv_f), conv2d(pair.event, w.conv_e)};
}

// Mixed attention map shared by both outputs.
template <typename T>
Tensor<T> bci_attention_map(const FeaturePair<T>& activated, bool sigmoid_map = false) {
  auto m = hadamard(activated.frame, activated.event);
  return sigmoid_map ? sigmoid(m) : m;
}

template <typename T>
FeaturePair<T> bci_enhance(const FeaturePair<T>& activated, bool sigmoid_map = false) {
  detail::require_pair(activated, "bci_enhance");
  const auto map = bci_attention_map(activated, sigmoid_map);
  return {map + activated.frame, map + activated.event};
}

// One direction of the cross attention: weights from (q_src, k_src), values from v_src.
template <typename T>
struct AttentionTerms {
  Tensor<T> q, k, v;  // [N,C]
  Tensor<T> weights;  // softmax rows, [N,N]
  Tensor<T> out;      // [N,C]
};

template <typename T>
AttentionTerms<T> cross_attend(const Tensor<T>& qk_tokens, const Tensor<T>& wq, const Tensor<T>& wk,
                               const Tensor<T>& v_tokens, const Tensor<T>& wv) {
  AttentionTerms<T> a;
  a.q = linear(qk_tokens, wq);
  a.k = linear(qk_tokens, wk);
  a.v = linear(v_tokens, wv);
  const T scale = T{1} / std::sqrt(static_cast<T>(qk_tokens.dim(1)));
  a.weights = softmax_rows(scaled(matmul_nt(a.q, a.k), scale));
  a.out = linear(a.weights, a.v);
  return a;
}

// Frame output is guided by event query/key; event output by frame query/key.
template <typename T>
std::pair<AttentionTerms<T>, AttentionTerms<T>> cross_attention_terms(const FeaturePair<T>& enhanced,
                                                                      const CafrWeights<T>& w) {
  detail::require_pair(enhanced, "cross_self_attention");
  w.validate(enhanced.frame.dim(0));
  const auto xf = to_tokens(enhanced.frame), xe = to_tokens(enhanced.event);
  return {cross_attend(xe, w.wq_e, w.wk_e, xf, w.wv_f), cross_attend(xf, w.wq_f, w.wk_f, xe, w.wv_e)};
}

template <typename T>
FeaturePair<T> cross_self_attention(const FeaturePair<T>& enhanced, const CafrWeights<T>& w) {
  const auto [tf, te] = cross_attention_terms(enhanced, w);
  const std::size_t h = enhanced.frame.dim(1), wd = enhanced.frame.dim(2);
  return {from_tokens(tf.out, h, wd), from_tokens(te.out, h, wd)};
}

// Re-targets the statistics of (attended * W) to those of the enhanced map.
template <typename T>
Tensor<T> align_statistics(const Tensor<T>& mixed, const Tensor<T>& reference, double eps = kStatsEpsilon) {
  require_same_dims(mixed, reference, "align_statistics");
  const auto sm = channel_stats(mixed, eps), sr = channel_stats(reference, eps);
  const std::size_t n = mixed.dim(1) * mixed.dim(2);
  Tensor<T> out(mixed.dims());
  for (std::size_t c = 0; c < mixed.dim(0); ++c)
    for (std::size_t i = 0; i < n; ++i)
      out[c * n + i] = sr.sigma[c] * (mixed[c * n + i] - sm.mu[c]) / sm.sigma[c] + sr.mu[c];
  return out;
}

template <typename T>
Tensor<T> channel_mix(const Tensor<T>& chw, const Tensor<T>& w) {
  return from_tokens(linear(to_tokens(chw), w), chw.dim(1), chw.dim(2));
}

template <typename T>
FeaturePair<T> tafr_refine_pair(const FeaturePair<T>& attended, const FeaturePair<T>& enhanced,
                                const CafrWeights<T>& w, double eps = kStatsEpsilon) {
  detail::require_pair(attended, "tafr_refine");
  require_same_dims(attended.frame, enhanced.frame, "tafr_refine");
  require_same_dims(attended.event, enhanced.event, "tafr_refine");
  w.validate(attended.frame.dim(0));
  return {align_statistics(channel_mix(attended.frame, w.w_f), enhanced.frame, eps),
          align_statistics(channel_mix(attended.event, w.w_e), enhanced.event, eps)};
}

template <typename T>
Tensor<T> tafr_refine(const FeaturePair<T>& attended, const FeaturePair<T>& enhanced, const CafrWeights<T>& w,
                      double eps = kStatsEpsilon) {
  auto refined = tafr_refine_pair(attended, enhanced, w, eps);
  return concat_channels(refined.frame, refined.event);
}

// Every intermediate of one forward pass; consumed by cafr_backward.
template <typename T>
struct CafrCache {
  CafrOptions options;
  FeaturePair<T> input;
  FeaturePair<T> activated;
  Tensor<T> map;  // attention map after the optional sigmoid
  FeaturePair<T> enhanced;
  AttentionTerms<T> att_f, att_e;
  FeaturePair<T> attended;
  FeaturePair<T> mixed;  // attended * W
  FeaturePair<T> refined;
  Tensor<T> output;
};

template <typename T>
CafrCache<T> cafr_forward_cached(const FeaturePair<T>& pair, const CafrWeights<T>& w, const CafrOptions& opt = {}) {
  detail::require_pair(pair, "cafr_forward");
  const std::size_t h = pair.frame.dim(1), wd = pair.frame.dim(2);
  CafrCache<T> c;
  c.options = opt;
  c.input = pair;
  c.activated = bci_activate(pair, w);
  if (opt.mul_add) {
    c.map = bci_attention_map(c.activated, opt.sigmoid_map);
    c.enhanced = {c.map + c.activated.frame, c.map + c.activated.event};
  } else {
    c.enhanced = c.activated;
  }
  if (opt.cross_attention) {
    std::tie(c.att_f, c.att_e) = cross_attention_terms(c.enhanced, w);
    c.attended = {from_tokens(c.att_f.out, h, wd), from_tokens(c.att_e.out, h, wd)};
  } else {
    c.attended = c.enhanced;
  }
  if (opt.refine) {
    c.mixed = {channel_mix(c.attended.frame, w.w_f), channel_mix(c.attended.event, w.w_e)};
    c.refined = {align_statistics(c.mixed.frame, c.enhanced.frame, opt.eps),
                 align_statistics(c.mixed.event, c.enhanced.event, opt.eps)};
  } else {
    c.refined = c.attended;
  }
  switch (opt.branch) {
    case CafrBranch::kDual: c.output = concat_channels(c.refined.frame, c.refined.event); break;
    case CafrBranch::kFrameOnly: c.output = c.refined.frame; break;
    case CafrBranch::kEventOnly: c.output = c.refined.event; break;
  }
  return c;
}

template <typename T>
Tensor<T> cafr_forward(const FeaturePair<T>& pair, const CafrWeights<T>& w, const CafrOptions& opt = {}) {
  return cafr_forward_cached(pair, w, opt).output;
}

template <typename T>
struct CafrGrads {
  FeaturePair<T> input;
  CafrWeights<T> weights;
};

namespace detail {

// Backward of align_statistics for one modality. Accumulates into d_mixed and d_reference.
template <typename T>
void align_statistics_backward(const Tensor<T>& mixed, const Tensor<T>& reference, const Tensor<T>& d_out,
                               double eps, Tensor<T>& d_mixed, Tensor<T>& d_reference) {
  const auto sm = channel_stats(mixed, eps), sr = channel_stats(reference, eps);
  const std::size_t c_n = mixed.dim(0), n = mixed.dim(1) * mixed.dim(2);
  Tensor<T> d_mu_r({c_n}), d_sigma_r({c_n}), d_mu_m({c_n}), d_sigma_m({c_n});
  Tensor<T> d_direct(mixed.dims());
  for (std::size_t c = 0; c < c_n; ++c) {
    T sum_g{0}, sum_gz{0}, sum_gc{0};
    for (std::size_t i = 0; i < n; ++i) {
      const T g = d_out[c * n + i];
      const T centred = mixed[c * n + i] - sm.mu[c];
      const T z = centred / sm.sigma[c];
      sum_g += g;
      sum_gz += g * z;
      sum_gc += g * centred;
      d_direct[c * n + i] = g * sr.sigma[c] / sm.sigma[c];
    }
    d_mu_r[c] = sum_g;
    d_sigma_r[c] = sum_gz;
    d_mu_m[c] = -sum_g * sr.sigma[c] / sm.sigma[c];
    d_sigma_m[c] = -sum_gc * sr.sigma[c] / (sm.sigma[c] * sm.sigma[c]);
  }
  d_mixed = d_direct + channel_stats_backward(mixed, sm, d_mu_m, d_sigma_m);
  d_reference = d_reference + channel_stats_backward(reference, sr, d_mu_r, d_sigma_r);
}

template <typename T>
void channel_mix_backward(const Tensor<T>& input, const Tensor<T>& w, const Tensor<T>& d_out, Tensor<T>& d_input,
                          Tensor<T>& d_w) {
  auto g = linear_backward(to_tokens(input), w, to_tokens(d_out));
  d_input = from_tokens(g.dx, input.dim(1), input.dim(2));
  d_w = d_w + g.dw;
}

// Returns d(qk_tokens), d(v_tokens); accumulates weight gradients.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> cross_attend_backward(const AttentionTerms<T>& a, const Tensor<T>& qk_tokens,
                                                      const Tensor<T>& v_tokens, const Tensor<T>& wq,
                                                      const Tensor<T>& wk, const Tensor<T>& wv, const Tensor<T>& d_out,
                                                      Tensor<T>& d_wq, Tensor<T>& d_wk, Tensor<T>& d_wv) {
  const auto g_out = linear_backward(a.weights, a.v, d_out);  // dx = dP, dw = dV
  const T scale = T{1} / std::sqrt(static_cast<T>(qk_tokens.dim(1)));
  const auto d_scores = scaled(softmax_rows_backward(a.weights, g_out.dx), scale);
  const auto d_q = linear(d_scores, a.k);
  const auto d_k = linear(transpose(d_scores), a.q);
  const auto gq = linear_backward(qk_tokens, wq, d_q);
  const auto gk = linear_backward(qk_tokens, wk, d_k);
  const auto gv = linear_backward(v_tokens, wv, g_out.dw);
  d_wq = d_wq + gq.dw;
  d_wk = d_wk + gk.dw;
  d_wv = d_wv + gv.dw;
  return {gq.dx + gk.dx, gv.dx};
}

}  // namespace detail

// Gradients of <output, d_output> w.r.t. both inputs and every weight.
template <typename T>
CafrGrads<T> cafr_backward(const CafrCache<T>& c, const CafrWeights<T>& w, const Tensor<T>& d_output) {
  require_same_dims(c.output, d_output, "cafr_backward");
  const auto& opt = c.options;
  const std::size_t ch = c.input.frame.dim(0), h = c.input.frame.dim(1), wd = c.input.frame.dim(2);
  const Dims chw{ch, h, wd};

  CafrGrads<T> g{{Tensor<T>::zeros(chw), Tensor<T>::zeros(chw)}, CafrWeights<T>::zeros(ch)};

  FeaturePair<T> d_refined{Tensor<T>::zeros(chw), Tensor<T>::zeros(chw)};
  switch (opt.branch) {
    case CafrBranch::kDual: std::tie(d_refined.frame, d_refined.event) = split_channels(d_output, ch); break;
    case CafrBranch::kFrameOnly: d_refined.frame = d_output; break;
    case CafrBranch::kEventOnly: d_refined.event = d_output; break;
  }

  FeaturePair<T> d_enhanced{Tensor<T>::zeros(chw), Tensor<T>::zeros(chw)};
  FeaturePair<T> d_attended;
  if (opt.refine) {
    FeaturePair<T> d_mixed;
    detail::align_statistics_backward(c.mixed.frame, c.enhanced.frame, d_refined.frame, opt.eps, d_mixed.frame,
                                      d_enhanced.frame);
    detail::align_statistics_backward(c.mixed.event, c.enhanced.event, d_refined.event, opt.eps, d_mixed.event,
                                      d_enhanced.event);
    detail::channel_mix_backward(c.attended.frame, w.w_f, d_mixed.frame, d_attended.frame, g.weights.w_f);
    detail::channel_mix_backward(c.attended.event, w.w_e, d_mixed.event, d_attended.event, g.weights.w_e);
  } else {
    d_attended = d_refined;
  }

  if (opt.cross_attention) {
    const auto xf = to_tokens(c.enhanced.frame), xe = to_tokens(c.enhanced.event);
    auto& gw = g.weights;
    // Frame output: q/k from events, v from frames.
    const auto [dxe_qk, dxf_v] = detail::cross_attend_backward(c.att_f, xe, xf, w.wq_e, w.wk_e, w.wv_f,
                                                               to_tokens(d_attended.frame), gw.wq_e, gw.wk_e, gw.wv_f);
    const auto [dxf_qk, dxe_v] = detail::cross_attend_backward(c.att_e, xf, xe, w.wq_f, w.wk_f, w.wv_e,
                                                               to_tokens(d_attended.event), gw.wq_f, gw.wk_f, gw.wv_e);
    d_enhanced.frame = d_enhanced.frame + from_tokens(dxf_qk + dxf_v, h, wd);
    d_enhanced.event = d_enhanced.event + from_tokens(dxe_qk + dxe_v, h, wd);
  } else {
    d_enhanced.frame = d_enhanced.frame + d_attended.frame;
    d_enhanced.event = d_enhanced.event + d_attended.event;
  }

  FeaturePair<T> d_activated = d_enhanced;
  if (opt.mul_add) {
    auto d_map = d_enhanced.frame + d_enhanced.event;
    if (opt.sigmoid_map) d_map = sigmoid_backward(c.map, d_map);
    const auto [da_f, da_e] = multiply_backward(c.activated.frame, c.activated.event, d_map);
    d_activated.frame = d_activated.frame + da_f;
    d_activated.event = d_activated.event + da_e;
  }

  auto gf = conv2d_backward(c.input.frame, w.conv_f, {}, d_activated.frame);
  auto ge = conv2d_backward(c.input.event, w.conv_e, {}, d_activated.event);
  g.input = {std::move(gf.dx), std::move(ge.dx)};
  g.weights.conv_f = std::move(gf.dw);
  g.weights.conv_e = std::move(ge.dw);
  return g;
}

// ---------------------------------------------------------------------------
// Finite-difference verification

struct GradcheckReport {
  double max_rel_error = 0.0;
  std::vector<std::pair<std::string, double>> probes;  // parameter group, relative error
};

inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
  return std::abs(analytic - numeric) / denom;
}

// Loss <cafr_forward(pair, w), R> with R uniform in [-1, 1] (or zero when zero_upstream).
// Probe k perturbs parameter group (k mod #groups) along a random Gaussian direction
// and compares the directional derivative against a central difference.
inline GradcheckReport cafr_gradcheck_report(const FeaturePair<double>& pair, const CafrWeights<double>& w,
                                             std::size_t probes, double step, std::uint64_t seed,
                                             const CafrOptions& opt = {}, bool zero_upstream = false) {
  Rng rng(seed);
  auto cache = cafr_forward_cached(pair, w, opt);
  Tensord upstream(cache.output.dims());
  if (!zero_upstream)
    for (auto& v : upstream.values()) v = rng.uniform(-1.0, 1.0);
  const auto grads = cafr_backward(cache, w, upstream);

  struct Group {
    std::string name;
    std::function<Tensord&(FeaturePair<double>&, CafrWeights<double>&)> param;
    const Tensord* grad;
  };
  std::vector<Group> groups;
  groups.push_back({"frame", [](FeaturePair<double>& p, CafrWeights<double>&) -> Tensord& { return p.frame; },
                    &grads.input.frame});
  groups.push_back({"event", [](FeaturePair<double>& p, CafrWeights<double>&) -> Tensord& { return p.event; },
                    &grads.input.event});
  std::vector<std::string> names;
  w.for_each([&](const std::string& name, const Tensord&) { names.push_back(name); });
  std::vector<const Tensord*> weight_grads;
  grads.weights.for_each([&](const std::string&, const Tensord& t) { weight_grads.push_back(&t); });
  for (std::size_t i = 0; i < names.size(); ++i) {
    groups.push_back({names[i],
                      [name = names[i]](FeaturePair<double>&, CafrWeights<double>& ww) -> Tensord& {
                        Tensord* found = nullptr;
                        ww.for_each([&](const std::string& n, Tensord& t) {
                          if (n == name) found = &t;
                        });
                        return *found;
                      },
                      weight_grads[i]});
  }

  auto loss = [&](const FeaturePair<double>& p, const CafrWeights<double>& ww) {
    return dot(cafr_forward(p, ww, opt), upstream);
  };

  GradcheckReport report;
  for (std::size_t k = 0; k < probes; ++k) {
    const Group& grp = groups[k % groups.size()];
    FeaturePair<double> p_plus = pair, p_minus = pair;
    CafrWeights<double> w_plus = w, w_minus = w;
    Tensord& tp = grp.param(p_plus, w_plus);
    Tensord& tm = grp.param(p_minus, w_minus);
    Tensord dir(tp.dims());
    for (auto& v : dir.values()) v = rng.normal();
    for (std::size_t i = 0; i < dir.size(); ++i) {
      tp[i] += step * dir[i];
      tm[i] -= step * dir[i];
    }
    const double numeric = (loss(p_plus, w_plus) - loss(p_minus, w_minus)) / (2.0 * step);
    const double analytic = dot(*grp.grad, dir);
    const double err = relative_error(analytic, numeric);
    report.probes.emplace_back(grp.name, err);
    report.max_rel_error = std::max(report.max_rel_error, err);
  }
  return report;
}

inline double cafr_gradcheck(const FeaturePair<double>& pair, const CafrWeights<double>& w, std::size_t probes,
                             double step, std::uint64_t seed = 0) {
  return cafr_gradcheck_report(pair, w, probes, step, seed).max_rel_error;
}

template <typename T>
FeaturePair<T> random_feature_pair(std::size_t c, std::size_t h, std::size_t w, Rng& rng) {
  FeaturePair<T> p{Tensor<T>({c, h, w}), Tensor<T>({c, h, w})};
  for (auto& v : p.frame.values()) v = static_cast<T>(rng.uniform(-1.0, 1.0));
  for (auto& v : p.event.values()) v = static_cast<T>(rng.uniform(-1.0, 1.0));
  return p;
}

}  // namespace evframe
