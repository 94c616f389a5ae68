// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>

#include "dgm/parameters.hpp"
#include "dgm/rng.hpp"
#include "dgm/tensor.hpp"

using namespace dgm;

TEST(Tensor, ConstructionAndShape) {
  Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.rank(), 2);
  EXPECT_EQ(t.size(), 6);
  EXPECT_EQ(t.dim(1), 3);
  EXPECT_DOUBLE_EQ(t.matrix()(1, 0), 4.0);
  EXPECT_DOUBLE_EQ(Tensor::scalar(2.5).item(), 2.5);
  EXPECT_THROW(Tensor({2, 2}, {1, 2, 3}), ShapeError);
  EXPECT_THROW(Tensor({1}, {std::nan("")}), NonFiniteError);
}

TEST(Tensor, ScalarBroadcastAndMismatch) {
  const Tensor a({3}, {1, 2, 3});
  EXPECT_TRUE(allclose(a + Tensor::scalar(1.0), Tensor({3}, {2, 3, 4})));
  EXPECT_TRUE(allclose(2.0 * a, Tensor({3}, {2, 4, 6})));
  EXPECT_THROW(a + Tensor({2}, {1, 2}), ShapeError);
}

TEST(Tensor, DomainErrors) {
  EXPECT_THROW(log(Tensor({1}, {0.0})), DomainError);
  EXPECT_THROW(log(Tensor({1}, {-1.0})), DomainError);
  EXPECT_THROW(sqrt(Tensor({1}, {-1.0})), DomainError);
  EXPECT_THROW(Tensor({1}, {1.0}) / Tensor({1}, {0.0}), DomainError);
  EXPECT_THROW(exp(Tensor({1}, {1000.0})), NonFiniteError);
}

TEST(Tensor, Reductions) {
  const Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_DOUBLE_EQ(sum(a).item(), 21.0);
  EXPECT_DOUBLE_EQ(mean(a).item(), 3.5);
  EXPECT_TRUE(allclose(sum(a, 1), Tensor({2}, {6, 15})));
  EXPECT_TRUE(allclose(mean(a, 0), Tensor({3}, {2.5, 3.5, 4.5})));
  EXPECT_THROW(sum(a, 2), ShapeError);
}

TEST(Tensor, ShapeOps) {
  const Tensor a({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(tile_rows(a, 3).shape(), (Shape{6, 2}));
  EXPECT_DOUBLE_EQ(tile_rows(a, 3).matrix()(4, 1), 2.0);
  EXPECT_TRUE(allclose(slice_cols(a, 1, 1), Tensor({2, 1}, {2, 4})));
  EXPECT_TRUE(allclose(concat_cols({a, slice_cols(a, 0, 1)}), Tensor({2, 3}, {1, 2, 1, 3, 4, 3})));
  EXPECT_TRUE(allclose(broadcast_rows(Tensor({2}, {7, 8}), 2), Tensor({2, 2}, {7, 8, 7, 8})));
  EXPECT_EQ(flatten_batch(Tensor::zeros({4})).shape(), (Shape{4, 1}));
  EXPECT_EQ(flatten_batch(Tensor::zeros({4, 2, 3})).shape(), (Shape{4, 6}));
  EXPECT_TRUE(allclose(gather_rows(a, {1, 1, 0}), Tensor({3, 2}, {3, 4, 3, 4, 1, 2})));
  EXPECT_THROW(reshape(a, {3}), ShapeError);
  EXPECT_THROW(matmul(a, Tensor::zeros({3, 1})), ShapeError);
}

TEST(Tensor, MatmulValue) {
  const Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor b({3, 1}, {1, 0, -1});
  EXPECT_TRUE(allclose(matmul(a, b), Tensor({2, 1}, {-2, -2})));
}

TEST(Autodiff, SimpleGradients) {
  auto tape = Tape::create();
  const Tensor x = tape->leaf(Tensor({3}, {1, 2, 3}));
  const Tensor y = sum(x * x);
  EXPECT_TRUE(allclose(grad(y, x), Tensor({3}, {2, 4, 6})));
  const Tensor z = sum(exp(x));
  EXPECT_TRUE(allclose(grad(z, x), exp(x.detach())));
}

TEST(Autodiff, ZeroRootGivesZeroGradients) {
  auto tape = Tape::create();
  const Tensor x = tape->leaf(Tensor({2}, {1.5, -2}));
  EXPECT_TRUE(allclose(grad(sum(x) * 0.0, x), Tensor::zeros({2})));
}

TEST(Autodiff, DetachBlocksGradient) {
  auto tape = Tape::create();
  const Tensor x = tape->leaf(Tensor({2}, {1, 2}));
  const Tensor y = sum(x * x.detach());
  EXPECT_TRUE(allclose(grad(y, x), Tensor({2}, {1, 2})));
}

TEST(Autodiff, StoreGradientsAccumulate) {
  ParameterStore store;
  store.add("w", Tensor({2}, {3, -1}));
  for (int k = 1; k <= 2; ++k) {
    auto tape = Tape::create();
    const Tensor w = tape->parameter_leaf("w", {2}, store.at("w").value);
    backward(sum(w * w), store);
    EXPECT_TRUE(allclose(store.gradient("w"), Tensor({2}, {6.0 * k, -2.0 * k})));
  }
  store.zero_grad();
  EXPECT_TRUE(allclose(store.gradient("w"), Tensor::zeros({2})));
}

TEST(Autodiff, SharedSubexpression) {
  auto tape = Tape::create();
  const Tensor x = tape->leaf(Tensor({1}, {2.0}));
  const Tensor u = x * x;
  const Tensor y = sum(u * u + u);
  // d/dx (x^4 + x^2) = 4x^3 + 2x
  EXPECT_NEAR(grad(y, x).item(), 36.0, 1e-12);
}

namespace {

using Expr = std::function<Tensor(const Tensor&, const Tensor&)>;

std::vector<Expr> expressions() {
  return {
      [](const Tensor& a, const Tensor& b) { return sum(tanh(a) * b); },
      [](const Tensor& a, const Tensor& b) { return sum(exp(0.5 * a) / (b * b + 1.0)); },
      [](const Tensor& a, const Tensor& b) { return mean(softplus(a - b) * sigmoid(b)); },
      [](const Tensor& a, const Tensor& b) { return sum(log(a * a + 1.0) + sqrt(b * b + 0.5)); },
      [](const Tensor& a, const Tensor& b) {
        return sum(tanh(matmul(a, reshape(b, {a.shape()[1], a.shape()[0]}))));
      },
      [](const Tensor& a, const Tensor& b) { return sum(sum(a * b, 1) * mean(a, 1)); },
      [](const Tensor& a, const Tensor& b) { return sum(square(concat_cols({a, tanh(b)}))); },
      [](const Tensor& a, const Tensor& b) { return sum(slice_cols(a * b, 0, 1)) + sum(mean(b, 0)); },
      [](const Tensor& a, const Tensor& b) { return sum(tile_rows(a, 2) * tile_rows(b, 2) * 0.5); },
      [](const Tensor& a, const Tensor& b) { return sum(broadcast_rows(mean(a, 0), a.shape()[0]) * b); },
      [](const Tensor& a, const Tensor& b) { return sum(pow(a * a + 1.0, b)); },
      [](const Tensor& a, const Tensor& b) { return sum((a - 2.0 * b) / (1.0 + square(a))) - mean(-a) * 3.0; },
  };
}

}  // namespace

// 120 random expression/input pairs against central differences.
TEST(Autodiff, RandomFiniteDifferenceSuite) {
  const auto exprs = expressions();
  int checked = 0;
  for (int c = 0; c < 120; ++c) {
    Rng rng(1000 + c);
    const Index n = 1 + static_cast<Index>(rng.next_u64() % 4);
    const Index d = 1 + static_cast<Index>(rng.next_u64() % 4);
    const Tensor a0 = uniform01({n, d}, rng) * 3.0 - 1.5;
    const Tensor b0 = uniform01({n, d}, rng) * 3.0 - 1.5;
    const Expr& f = exprs[static_cast<std::size_t>(c) % exprs.size()];

    auto tape = Tape::create();
    const Tensor a = tape->leaf(a0);
    const Tensor b = tape->leaf(b0);
    const Tensor y = f(a, b);
    const Tensor ga = grad(y, a);
    const Tensor gb = grad(y, b);

    const double eps = 1e-6;
    for (int which = 0; which < 2; ++which) {
      const Tensor& base = which == 0 ? a0 : b0;
      const Tensor& g = which == 0 ? ga : gb;
      for (Index i = 0; i < base.size(); ++i) {
        Array up = base.data(), down = base.data();
        up[i] += eps;
        down[i] -= eps;
        const Tensor tu(base.shape(), up), td(base.shape(), down);
        const double fu = which == 0 ? f(tu, b0).item() : f(a0, tu).item();
        const double fd = which == 0 ? f(td, b0).item() : f(a0, td).item();
        const double numeric = (fu - fd) / (2 * eps);
        EXPECT_NEAR(g[i], numeric, 1e-6 * std::max(1.0, std::abs(numeric))) << "case " << c << " input " << which;
      }
    }
    ++checked;
  }
  EXPECT_GE(checked, 100);
}
