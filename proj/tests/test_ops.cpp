#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pagsr/ops.hpp"

namespace pagsr {
namespace {

using testing::direct_conv2d;
using testing::random_tensor;

TEST(Tensor, RejectsInvalidShapes) {
  EXPECT_THROW(Tensor32(Shape{1, 0, 2, 2}), ShapeError);
  EXPECT_THROW(Tensor32(Shape{1, 1, 2, 2}, std::vector<float>(3)), ShapeError);
  Tensor32 t(Shape{2, 3, 4, 5});
  EXPECT_EQ(t.numel(), 120u);
  EXPECT_FALSE(t.has_grad());
  t.ensure_grad();
  EXPECT_EQ(t.grad().size(), t.numel());
}

TEST(Tensor, HandleSemanticsAndClone) {
  Tensor32 a(Shape{1, 1, 2, 2}, 1.0f);
  Tensor32 alias = a;
  alias[0] = 5.0f;
  EXPECT_EQ(a[0], 5.0f);
  Tensor32 copy = a.clone();
  copy[0] = 7.0f;
  EXPECT_EQ(a[0], 5.0f);
}

TEST(Tensor, FiniteCheckFlagsNaN) {
  set_finite_checks(true);
  Tensor64 a(Shape{1, 1, 1, 2}, std::vector<double>{1.0, NAN});
  EXPECT_THROW(ops::relu(ops::add(a, a)), NumericError);
  set_finite_checks(false);
  EXPECT_NO_THROW(ops::add(a, a));
}

TEST(Conv2d, ScalingIdentity) {
  Tensor64 x(Shape{1, 1, 3, 3}, 1.0);
  Tensor64 w(Shape{1, 1, 1, 1}, 2.0);
  Tensor64 b(Shape{1, 1, 1, 1}, 0.0);
  const Tensor64 y = ops::conv2d(x, w, b);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 3, 3}));
  for (double v : y.data()) EXPECT_EQ(v, 2.0);
}

TEST(Conv2d, StrideTwoShape) {
  std::mt19937_64 rng(1);
  const auto x = random_tensor(Shape{1, 1, 4, 4}, rng);
  const auto w = random_tensor(Shape{1, 1, 2, 2}, rng);
  const Tensor64 b(Shape{1, 1, 1, 1});
  EXPECT_EQ(ops::conv2d(x, w, b, {{2, 2}, {0, 0}}).shape(), (Shape{1, 1, 2, 2}));
}

TEST(Conv2d, MatchesDirectOracleFor9x1Kernel) {
  std::mt19937_64 rng(7);
  const auto x = random_tensor(Shape{1, 2, 5, 5}, rng);
  const auto w = random_tensor(Shape{3, 2, 9, 1}, rng);
  const auto b = random_tensor(Shape{3, 1, 1, 1}, rng);
  const Tensor64 y = ops::conv2d(x, w, b, {{1, 1}, {4, 0}});
  const Tensor64 ref = direct_conv2d(x, w, b, 1, 1, 4, 0);
  ASSERT_EQ(y.shape(), ref.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-6);
}

TEST(Conv2d, MatchesDirectOracleOnRandomGeometries) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dim(1, 7), k(1, 4), s(1, 3), p(0, 2);
  for (int trial = 0; trial < 40; ++trial) {
    const int kh = k(rng), kw = k(rng), ph = p(rng), pw = p(rng);
    const int h = std::max(dim(rng), kh), w = std::max(dim(rng), kw);
    const int sh = s(rng), sw = s(rng);
    const auto x = random_tensor(Shape{2, dim(rng) % 3 + 1, h, w}, rng);
    const auto wt = random_tensor(Shape{dim(rng) % 4 + 1, x.shape().c, kh, kw}, rng);
    const auto b = random_tensor(Shape{wt.shape().n, 1, 1, 1}, rng);
    const Tensor64 y = ops::conv2d(x, wt, b, {{sh, sw}, {ph, pw}});
    const Tensor64 ref = direct_conv2d(x, wt, b, sh, sw, ph, pw);
    ASSERT_EQ(y.shape(), ref.shape());
    for (std::size_t i = 0; i < y.numel(); ++i) ASSERT_NEAR(y[i], ref[i], 1e-12);
  }
}

TEST(Conv2d, IdentityKernelIsIdentity) {
  std::mt19937_64 rng(3);
  const auto x = random_tensor(Shape{2, 4, 5, 6}, rng);
  Tensor64 w(Shape{4, 4, 1, 1});
  for (int c = 0; c < 4; ++c) w.at(c, c, 0, 0) = 1.0;
  const Tensor64 y = ops::conv2d(x, w, Tensor64(Shape{4, 1, 1, 1}));
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(Conv2d, ShapeErrors) {
  const Tensor64 x(Shape{1, 2, 4, 4});
  const Tensor64 b(Shape{1, 1, 1, 1});
  EXPECT_THROW(ops::conv2d(x, Tensor64(Shape{1, 3, 3, 3}), b), ShapeError);
  // Degenerate output is an error, not a clamp.
  EXPECT_THROW(ops::conv2d(x, Tensor64(Shape{1, 2, 5, 1}), b), ShapeError);
  EXPECT_THROW(ops::conv2d(x, Tensor64(Shape{2, 2, 1, 1}), b), ShapeError);
  try {
    ops::conv2d(x, Tensor64(Shape{1, 3, 3, 3}), b);
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("channels"), std::string::npos);
  }
}

TEST(PixelShuffle, ChannelConstantsFormCells) {
  Tensor64 x(Shape{1, 4, 2, 2});
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 4; ++i) x[c * 4 + i] = c;
  const Tensor64 y = ops::pixel_shuffle(x, 2);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 4, 4}));
  for (int cy = 0; cy < 2; ++cy)
    for (int cx = 0; cx < 2; ++cx) {
      EXPECT_EQ(y.at(0, 0, 2 * cy, 2 * cx), 0.0);
      EXPECT_EQ(y.at(0, 0, 2 * cy, 2 * cx + 1), 1.0);
      EXPECT_EQ(y.at(0, 0, 2 * cy + 1, 2 * cx), 2.0);
      EXPECT_EQ(y.at(0, 0, 2 * cy + 1, 2 * cx + 1), 3.0);
    }
}

TEST(PixelShuffle, FactorOneIsIdentity) {
  std::mt19937_64 rng(5);
  const auto x = random_tensor(Shape{2, 3, 4, 5}, rng);
  const Tensor64 y = ops::pixel_shuffle(x, 1);
  EXPECT_EQ(y.shape(), x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y[i], x[i]);
}

// Inverse rearrangement written directly from the index formula.
Tensor64 unshuffle(const Tensor64& y, int r) {
  const Shape& s = y.shape();
  Tensor64 x(Shape{s.n, s.c * r * r, s.h / r, s.w / r});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int h = 0; h < s.h; ++h)
        for (int w = 0; w < s.w; ++w) x.at(n, c * r * r + (h % r) * r + (w % r), h / r, w / r) = y.at(n, c, h, w);
  return x;
}

TEST(PixelShuffle, InverseRearrangementRoundTrips) {
  std::mt19937_64 rng(9);
  const auto x = random_tensor(Shape{2, 8, 3, 3}, rng);
  const Tensor64 back = unshuffle(ops::pixel_shuffle(x, 2), 2);
  ASSERT_EQ(back.shape(), x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(back[i], x[i]);
}

TEST(PixelShuffle, PreservesMultiset) {
  std::mt19937_64 rng(13);
  for (int r : {1, 2, 3}) {
    const auto x = random_tensor(Shape{2, 2 * r * r, 3, 2}, rng);
    const Tensor64 y = ops::pixel_shuffle(x, r);
    std::vector<double> a(x.data().begin(), x.data().end());
    std::vector<double> b(y.data().begin(), y.data().end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
  }
}

TEST(PixelShuffle, IndivisibleChannelsThrow) {
  EXPECT_THROW(ops::pixel_shuffle(Tensor64(Shape{1, 6, 2, 2}), 2), ShapeError);
}

TEST(Elementwise, AnalyticValues) {
  const Tensor64 zero(Shape{1, 1, 1, 1}, 0.0);
  EXPECT_EQ(ops::sigmoid(zero)[0], 0.5);
  const Tensor64 v(Shape{1, 1, 1, 2}, std::vector<double>{-3.0, 3.0});
  const Tensor64 r = ops::relu(v);
  EXPECT_EQ(r[0], 0.0);
  EXPECT_EQ(r[1], 3.0);
  const Tensor64 d = ops::elementwise(ops::ElementwiseOp::kSigmoid, zero);
  EXPECT_EQ(d[0], 0.5);
}

TEST(Elementwise, MulBroadcastHalves) {
  std::mt19937_64 rng(17);
  const auto x = random_tensor(Shape{1, 4, 2, 2}, rng);
  const Tensor64 map(Shape{1, 1, 2, 2}, 0.5);
  const Tensor64 y = ops::elementwise(ops::ElementwiseOp::kMulBroadcast, x, &map);
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y[i], x[i] * 0.5);
}

TEST(Elementwise, BroadcastRuleViolations) {
  const Tensor64 x(Shape{1, 4, 2, 2});
  EXPECT_THROW(ops::mul_broadcast(x, Tensor64(Shape{1, 2, 2, 2})), ShapeError);
  EXPECT_THROW(ops::mul_broadcast(x, Tensor64(Shape{1, 1, 3, 2})), ShapeError);
  EXPECT_THROW(ops::add(x, Tensor64(Shape{1, 4, 2, 3})), ShapeError);
  EXPECT_THROW(ops::elementwise(ops::ElementwiseOp::kAdd, x), ShapeError);
}

TEST(Elementwise, SigmoidStaysInOpenInterval) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_tensor(Shape{1, 2, 8, 8}, rng, -30.0, 30.0);
    for (const auto out = ops::sigmoid(x); double v : out.data()) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

TEST(Concat, ShapesOrderAndSlicing) {
  std::mt19937_64 rng(23);
  const auto a = random_tensor(Shape{1, 2, 2, 2}, rng);
  const auto b = random_tensor(Shape{1, 3, 2, 2}, rng);
  const Tensor64 y = ops::concat_channels<double>({a, b});
  EXPECT_EQ(y.shape(), (Shape{1, 5, 2, 2}));
  const Tensor64 a2 = ops::slice_channels(y, 0, 2);
  const Tensor64 b2 = ops::slice_channels(y, 2, 5);
  for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_EQ(a2[i], a[i]);
  for (std::size_t i = 0; i < b.numel(); ++i) EXPECT_EQ(b2[i], b[i]);

  const Tensor64 single = ops::concat_channels<double>({a});
  for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_EQ(single[i], a[i]);
}

TEST(Concat, SliceRecoversEveryPartAcrossBatches) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Tensor64> parts;
    for (int p = 0; p < 3; ++p) parts.push_back(random_tensor(Shape{3, 1 + trial % 3 + p, 2, 3}, rng));
    const Tensor64 y = ops::concat_channels(parts);
    int c0 = 0;
    for (const auto& p : parts) {
      const Tensor64 s = ops::slice_channels(y, c0, c0 + p.shape().c);
      for (std::size_t i = 0; i < p.numel(); ++i) ASSERT_EQ(s[i], p[i]);
      c0 += p.shape().c;
    }
  }
}

TEST(Concat, Errors) {
  EXPECT_THROW(ops::concat_channels<double>({}), ShapeError);
  EXPECT_THROW(ops::concat_channels<double>({Tensor64(Shape{1, 1, 2, 2}), Tensor64(Shape{1, 1, 2, 3})}),
               ShapeError);
}

TEST(LossTerms, IdentityAndConstantField) {
  std::mt19937_64 rng(31);
  const auto p = random_tensor(Shape{1, 1, 4, 4}, rng);
  const auto zero = ops::loss_terms(p, p);
  EXPECT_EQ(zero.l2[0], 0.0);
  EXPECT_EQ(zero.l1[0], 0.0);
  Tensor64 t = p.clone();
  for (double& v : t.data()) v -= 2.0;
  const auto two = ops::loss_terms(p, t);
  EXPECT_NEAR(two.l2[0], 4.0, 1e-12);
  EXPECT_NEAR(two.l1[0], 2.0, 1e-12);
}

TEST(LossTerms, MatchesDirectSummation) {
  std::mt19937_64 rng(37);
  const auto p = random_tensor(Shape{1, 1, 4, 4}, rng);
  const auto t = random_tensor(Shape{1, 1, 4, 4}, rng);
  long double sq = 0, ab = 0;
  for (int i = 0; i < 16; ++i) {
    const long double d = static_cast<long double>(p[i]) - t[i];
    sq += d * d;
    ab += d < 0 ? -d : d;
  }
  const auto terms = ops::loss_terms(p, t);
  EXPECT_NEAR(terms.l2[0], static_cast<double>(sq / 16), 1e-12);
  EXPECT_NEAR(terms.l1[0], static_cast<double>(ab / 16), 1e-12);
}

TEST(LossTerms, SymmetricUnderSwap) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_tensor(Shape{2, 1, 3, 5}, rng);
    const auto t = random_tensor(Shape{2, 1, 3, 5}, rng);
    const auto ab = ops::loss_terms(p, t);
    const auto ba = ops::loss_terms(t, p);
    EXPECT_EQ(ab.l2[0], ba.l2[0]);
    EXPECT_EQ(ab.l1[0], ba.l1[0]);
  }
}

TEST(LossTerms, ShapeMismatchThrows) {
  EXPECT_THROW(ops::loss_terms(Tensor64(Shape{1, 1, 2, 2}), Tensor64(Shape{1, 1, 2, 3})), ShapeError);
}

TEST(Backward, SumGivesOnes) {
  Tensor64 x(Shape{2, 3, 2, 2}, 0.3);
  x.set_requires_grad(true);
  Tape<double> tape;
  tape.backward(ops::sum(x, &tape));
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, MeanSquaredSigmoidAtZero) {
  Tensor64 x(Shape{1, 2, 3, 3}, 0.0);
  x.set_requires_grad(true);
  Tape<double> tape;
  const Tensor64 s = ops::sigmoid(x, &tape);
  const auto terms = ops::loss_terms(s, Tensor64(s.shape(), 0.0), &tape);
  tape.backward(terms.l2);
  const double expected = 0.25 / static_cast<double>(x.numel());
  for (double g : x.grad()) EXPECT_NEAR(g, expected, 1e-15);
}

TEST(Backward, FanOutAccumulates) {
  Tensor64 x(Shape{1, 1, 2, 2}, 1.5);
  x.set_requires_grad(true);
  Tape<double> tape;
  const Tensor64 y = ops::add(x, x, &tape);
  tape.backward(ops::sum(ops::add(y, x, &tape), &tape));
  for (double g : x.grad()) EXPECT_EQ(g, 3.0);
}

TEST(Backward, ErrorPaths) {
  Tensor64 x(Shape{1, 1, 2, 2}, 1.0);
  x.set_requires_grad(true);
  Tape<double> tape;
  const Tensor64 y = ops::relu(x, &tape);
  EXPECT_THROW(tape.backward(y), AutogradError);  // non-scalar
  const Tensor64 l = ops::sum(y, &tape);
  tape.backward(l);
  EXPECT_THROW(tape.backward(l), AutogradError);  // second pass without reset
  tape.reset();
  const Tensor64 l2 = ops::sum(ops::relu(x, &tape), &tape);
  EXPECT_NO_THROW(tape.backward(l2));
}

TEST(Backward, ReachableIntermediatesGetGradients) {
  std::mt19937_64 rng(43);
  auto x = random_tensor(Shape{1, 2, 4, 4}, rng);
  auto w = random_tensor(Shape{2, 2, 3, 3}, rng);
  auto b = random_tensor(Shape{2, 1, 1, 1}, rng);
  for (auto* t : {&x, &w, &b}) t->set_requires_grad(true);
  Tape<double> tape;
  const Tensor64 c = ops::conv2d(x, w, b, ops::same_padding(3, 3), &tape);
  const Tensor64 r = ops::relu(c, &tape);
  tape.backward(ops::sum(r, &tape));
  for (const Tensor64* t : std::initializer_list<const Tensor64*>{&x, &w, &b, &c, &r}) EXPECT_TRUE(t->has_grad());
}

TEST(Backward, NoTapeMeansNoRecording) {
  Tensor64 x(Shape{1, 1, 2, 2}, 1.0);
  x.set_requires_grad(true);
  const Tensor64 y = ops::relu(x);
  EXPECT_FALSE(y.requires_grad());
  Tape<double> tape;
  const Tensor64 z = ops::relu(Tensor64(Shape{1, 1, 2, 2}), &tape);
  EXPECT_EQ(tape.size(), 0u);  // no input requires grad
  EXPECT_FALSE(z.requires_grad());
}

}  // namespace
}  // namespace pagsr
