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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "evframe/tensor_math.hpp"
#include "oracles.hpp"

using namespace evframe;
using oracle::central_difference;
using oracle::random_tensor;
using oracle::rel_err;

namespace {

constexpr double kStep = 1e-5;
constexpr int kProbes = 100;

// Loss <g, f(x)> differentiated along a random direction.
template <typename Fwd, typename Grad>
double worst_probe(Rng& rng, const Dims& in_dims, const Dims& out_dims, Fwd fwd, Grad grad) {
  double worst = 0.0;
  for (int p = 0; p < kProbes; ++p) {
    const auto x = random_tensor(in_dims, rng);
    const auto g = random_tensor(out_dims, rng);
    const auto dir = random_tensor(in_dims, rng);
    const double analytic = dot(grad(x, g), dir);
    const double numeric = central_difference([&](const Tensord& v) { return dot(g, fwd(v)); }, x, dir, kStep);
    worst = std::max(worst, rel_err(analytic, numeric));
  }
  return worst;
}

ConvWeights<double> with_kernel(const ConvWeights<double>& w, const Tensord& k) {
  return ConvWeights<double>(k, w.bias);
}

}  // namespace

TEST(Conv2d, IdentityKernel) {
  Rng rng(1);
  const auto x = random_tensor({3, 5, 4}, rng);
  EXPECT_EQ(conv2d(x, ConvWeights<double>::identity(3)), x);
}

TEST(Conv2d, OnesKernelSumsNeighbourhood) {
  Tensord x({1, 5, 5}, 2.5);
  ConvWeights<double> w(1, 1, 3, 3);
  w.kernel.fill(1.0);
  const auto y = conv2d(x, w, {1, 1});
  EXPECT_DOUBLE_EQ(y(0, 2, 2), 9 * 2.5);
  EXPECT_DOUBLE_EQ(y(0, 0, 0), 4 * 2.5);
}

TEST(Conv2d, StrideTwoShape) {
  const auto y = conv2d(Tensord({1, 4, 4}, 1.0), ConvWeights<double>(2, 1, 3, 3), {2, 1});
  EXPECT_EQ(y.dims(), (Dims{2, 2, 2}));
  EXPECT_EQ(conv_out_extent(7, 3, 2, 1), 4u);
}

TEST(Conv2d, Errors) {
  EXPECT_THROW(conv2d(Tensord({2, 4, 4}), ConvWeights<double>(1, 3, 1, 1)), ShapeError);
  EXPECT_THROW(conv2d(Tensord({1, 2, 2}), ConvWeights<double>(1, 1, 5, 5)), ShapeError);
  EXPECT_THROW(conv2d(Tensord({1, 4, 4}), ConvWeights<double>(1, 1, 1, 1), {0, 0}), DomainError);
}

TEST(Conv2d, LinearInInputAndWeights) {
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    auto w = ConvWeights<double>::random(3, 2, 3, 3, rng);
    w.bias.fill(0.0);
    const auto x1 = random_tensor({2, 6, 5}, rng), x2 = random_tensor({2, 6, 5}, rng);
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    const ConvGeometry g{2, 1};
    const auto lhs = conv2d(scaled(x1, a) + scaled(x2, b), w, g);
    const auto rhs = scaled(conv2d(x1, w, g), a) + scaled(conv2d(x2, w, g), b);
    EXPECT_LT(max_abs_diff(lhs, rhs), 1e-9);

    const auto k2 = random_tensor(w.kernel.dims(), rng);
    const auto lw = conv2d(x1, with_kernel(w, scaled(w.kernel, a) + scaled(k2, b)), g);
    const auto rw = scaled(conv2d(x1, w, g), a) + scaled(conv2d(x1, with_kernel(w, k2), g), b);
    EXPECT_LT(max_abs_diff(lw, rw), 1e-9);
  }
}

TEST(Linear, Examples) {
  const Tensord x({1, 2}, {1, 2});
  const Tensord eye({2, 2}, {1, 0, 0, 1});
  const Tensord swap({2, 2}, {0, 1, 1, 0});
  EXPECT_EQ(linear(x, eye), x);
  EXPECT_EQ(linear(x, swap), Tensord({1, 2}, {2, 1}));
  EXPECT_EQ(linear(x, Tensord({2, 3})), Tensord({1, 3}));
  EXPECT_THROW(linear(x, Tensord({3, 2})), ShapeError);
}

TEST(Softmax, Examples) {
  const auto u = softmax_rows(Tensord({1, 4}, 7.0));
  for (auto v : u.values()) EXPECT_NEAR(v, 0.25, 1e-15);
  const auto y = softmax_rows(Tensord({1, 2}, {0.0, std::log(3.0)}));
  EXPECT_NEAR(y[0], 0.25, 1e-15);
  EXPECT_NEAR(y[1], 0.75, 1e-15);
  EXPECT_THROW(softmax_rows(Tensord({1, 2}, {0.0, NAN})), DomainError);
}

TEST(Softmax, RowsSumToOneAndShiftInvariant) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    auto x = random_tensor({4, 9}, rng, -30, 30);
    const auto y = softmax_rows(x);
    for (std::size_t r = 0; r < 4; ++r) {
      double s = 0;
      for (std::size_t j = 0; j < 9; ++j) {
        EXPECT_GT(y(r, j), 0.0);
        s += y(r, j);
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
    const double c = rng.uniform(-100, 100);
    for (auto& v : x.values()) v += c;
    EXPECT_LT(max_abs_diff(softmax_rows(x), y), 1e-12);
  }
}

TEST(Softmax, LargeInputsStayFinite) {
  const auto y = softmax_rows(Tensord({1, 2}, {1000.0, 1000.0}));
  EXPECT_NEAR(y[0], 0.5, 1e-15);
}

TEST(ChannelStats, Examples) {
  const double floor = std::sqrt(kStatsEpsilon);
  const auto c = channel_stats(Tensord({1, 3, 3}, 5.0));
  EXPECT_DOUBLE_EQ(c.mu[0], 5.0);
  EXPECT_NEAR(c.sigma[0], floor, 1e-15);
  EXPECT_NEAR(c.sigma[0], 3.162e-3, 1e-6);
  const auto pm = channel_stats(Tensord({1, 1, 2}, {-1.0, 1.0}));
  EXPECT_DOUBLE_EQ(pm.mu[0], 0.0);
  EXPECT_NEAR(pm.sigma[0], std::sqrt(1.0 + kStatsEpsilon), 1e-15);
  const auto z = channel_stats(Tensord({2, 2, 2}));
  EXPECT_EQ(z.mu[1], 0.0);
  EXPECT_NEAR(z.sigma[1], floor, 1e-15);
  EXPECT_THROW(channel_stats(Tensord({2, 2})), ShapeError);
}

TEST(ChannelStats, AffineMap) {
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const auto x = random_tensor({3, 4, 5}, rng);
    double a = rng.uniform(1, 5);
    if (rng.bernoulli(0.5)) a = -a;
    const double b = rng.uniform(-10, 10);
    Tensord y = scaled(x, a);
    for (auto& v : y.values()) v += b;
    // eps = 0 isolates the affine behaviour from the floor
    const auto sx = channel_stats(x, 0.0), sy = channel_stats(y, 0.0);
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_NEAR(sy.mu[c], a * sx.mu[c] + b, 1e-9);
      EXPECT_NEAR(sy.sigma[c], std::abs(a) * sx.sigma[c], 1e-9);
    }
  }
}

TEST(Backward, LinearHandCase) {
  const auto g = linear_backward(Tensord({1, 1}, 2.0), Tensord({1, 1}, 5.0), Tensord({1, 1}, 3.0));
  EXPECT_DOUBLE_EQ(g.dw[0], 6.0);
  EXPECT_DOUBLE_EQ(g.dx[0], 15.0);
}

TEST(Backward, SingleEntrySoftmaxIsFlat) {
  const auto y = softmax_rows(Tensord({3, 1}, {1.0, -4.0, 9.0}));
  const auto dx = softmax_rows_backward(y, Tensord({3, 1}, {2.0, 3.0, 4.0}));
  for (auto v : dx.values()) EXPECT_EQ(v, 0.0);
}

TEST(Backward, MissingCacheRaisesStateError) {
  EXPECT_THROW(Conv2dNode<double>(ConvWeights<double>::identity(1)).backward(Tensord({1, 1, 1})), StateError);
  EXPECT_THROW(LinearNode<double>().backward(Tensord({1, 1})), StateError);
  EXPECT_THROW(SoftmaxRowsNode<double>().backward(Tensord({1, 1})), StateError);
  EXPECT_THROW(ChannelStatsNode<double>().backward(Tensord({1}), Tensord({1})), StateError);
  EXPECT_THROW(MultiplyNode<double>().backward(Tensord({1})), StateError);
  EXPECT_THROW(AddNode<double>().backward(Tensord({1})), StateError);
}

TEST(Backward, Conv2dMatchesFiniteDifferences) {
  Rng rng(5);
  for (ConvGeometry g : {ConvGeometry{1, 0}, ConvGeometry{1, 1}, ConvGeometry{2, 1}}) {
    const auto w = ConvWeights<double>::random(3, 2, 3, 3, rng);
    const Dims out{3, conv_out_extent(6, 3, g.stride, g.pad), conv_out_extent(5, 3, g.stride, g.pad)};
    const double dx_err = worst_probe(
        rng, {2, 6, 5}, out, [&](const Tensord& x) { return conv2d(x, w, g); },
        [&](const Tensord& x, const Tensord& dy) {
          Conv2dNode<double> node(w, g);
          node.forward(x);
          return node.backward(dy).dx;
        });
    EXPECT_LT(dx_err, 1e-6);

    const auto x = random_tensor({2, 6, 5}, rng);
    const double dw_err = worst_probe(
        rng, w.kernel.dims(), out, [&](const Tensord& k) { return conv2d(x, with_kernel(w, k), g); },
        [&](const Tensord& k, const Tensord& dy) { return conv2d_backward(x, with_kernel(w, k), g, dy).dw.kernel; });
    EXPECT_LT(dw_err, 1e-6);

    const double db_err = worst_probe(
        rng, {3}, out, [&](const Tensord& b) { return conv2d(x, ConvWeights<double>(w.kernel, b), g); },
        [&](const Tensord& b, const Tensord& dy) {
          return conv2d_backward(x, ConvWeights<double>(w.kernel, b), g, dy).dw.bias;
        });
    EXPECT_LT(db_err, 1e-6);
  }
}

TEST(Backward, LinearMatchesFiniteDifferences) {
  Rng rng(6);
  const auto w = random_tensor({4, 3}, rng);
  const auto x = random_tensor({5, 4}, rng);
  EXPECT_LT(worst_probe(
                rng, {5, 4}, {5, 3}, [&](const Tensord& v) { return linear(v, w); },
                [&](const Tensord& v, const Tensord& dy) {
                  LinearNode<double> node;
                  node.forward(v, w);
                  return node.backward(dy).dx;
                }),
            1e-6);
  EXPECT_LT(worst_probe(
                rng, {4, 3}, {5, 3}, [&](const Tensord& v) { return linear(x, v); },
                [&](const Tensord& v, const Tensord& dy) { return linear_backward(x, v, dy).dw; }),
            1e-6);
}

TEST(Backward, SoftmaxMatchesFiniteDifferences) {
  Rng rng(7);
  EXPECT_LT(worst_probe(
                rng, {4, 6}, {4, 6}, [](const Tensord& v) { return softmax_rows(v); },
                [](const Tensord& v, const Tensord& dy) {
                  SoftmaxRowsNode<double> node;
                  node.forward(v);
                  return node.backward(dy);
                }),
            1e-6);
}

TEST(Backward, ChannelStatsMatchesFiniteDifferences) {
  Rng rng(8);
  double worst = 0.0;
  for (int p = 0; p < kProbes; ++p) {
    const auto x = random_tensor({3, 4, 2}, rng);
    const auto gm = random_tensor({3}, rng), gs = random_tensor({3}, rng);
    const auto dir = random_tensor(x.dims(), rng);
    ChannelStatsNode<double> node;
    node.forward(x);
    const double analytic = dot(node.backward(gm, gs), dir);
    const auto loss = [&](const Tensord& v) {
      const auto s = channel_stats(v);
      return dot(gm, s.mu) + dot(gs, s.sigma);
    };
    worst = std::max(worst, rel_err(analytic, central_difference(loss, x, dir, kStep)));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Backward, ElementwiseMatchesFiniteDifferences) {
  Rng rng(9);
  const auto b = random_tensor({2, 3, 3}, rng);
  const auto pick_first = [&](const Tensord& a, const Tensord& dy) {
    MultiplyNode<double> node;
    node.forward(a, b);
    return node.backward(dy).first;
  };
  EXPECT_LT(worst_probe(rng, b.dims(), b.dims(), [&](const Tensord& a) { return hadamard(a, b); }, pick_first), 1e-6);
  const auto pick_second = [&](const Tensord& a, const Tensord& dy) {
    MultiplyNode<double> node;
    node.forward(b, a);
    return node.backward(dy).second;
  };
  EXPECT_LT(worst_probe(rng, b.dims(), b.dims(), [&](const Tensord& a) { return hadamard(b, a); }, pick_second), 1e-6);
  const auto add_grad = [&](const Tensord& a, const Tensord& dy) {
    AddNode<double> node;
    node.forward(a, b);
    return node.backward(dy).first;
  };
  EXPECT_LT(worst_probe(rng, b.dims(), b.dims(), [&](const Tensord& a) { return a + b; }, add_grad), 1e-6);
  const auto sig_grad = [](const Tensord& a, const Tensord& dy) { return sigmoid_backward(sigmoid(a), dy); };
  EXPECT_LT(worst_probe(rng, b.dims(), b.dims(), [](const Tensord& a) { return sigmoid(a); }, sig_grad), 1e-6);
}

TEST(Precision, FloatPathTracksDouble) {
  Rng rng(10);
  for (int i = 0; i < 10; ++i) {
    const auto w = ConvWeights<double>::random(4, 3, 3, 3, rng);
    const auto x = random_tensor({3, 8, 7}, rng);
    const auto yd = conv2d(x, w, {2, 1});
    const auto yf = conv2d(x.cast<float>(), w.cast<float>(), {2, 1});
    for (std::size_t k = 0; k < yd.size(); ++k) EXPECT_LE(std::abs(yd[k] - yf[k]), 1e-3 * std::max(1.0, std::abs(yd[k])));
    const auto sd = softmax_rows(random_tensor({3, 5}, rng, -5, 5));
    const auto sf = softmax_rows(sd.cast<float>());
    EXPECT_LT(max_abs_diff(softmax_rows(sd), sf.cast<double>()), 1e-3);
  }
}
