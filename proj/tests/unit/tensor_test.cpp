#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "cv4code/common/error.hpp"
#include "cv4code/common/rng.hpp"
#include "cv4code/tensor/grad_check.hpp"
#include "cv4code/tensor/ops.hpp"

namespace {

using namespace cv4code;
using namespace cv4code::tensor;
using V = Var<double>;

Tensor<double> random_tensor(const Shape& shape, SplitMix64& rng, double lo = -1, double hi = 1) {
  Tensor<double> t(shape);
  for (auto& x : t.values()) x = lo + (hi - lo) * rng.uniform();
  return t;
}

Tensor<double> random_ints(const Shape& shape, SplitMix64& rng, int span = 3) {
  Tensor<double> t(shape);
  for (auto& x : t.values()) x = static_cast<double>(static_cast<int>(rng.below(2 * span + 1)) - span);
  return t;
}

V param(const Shape& shape, SplitMix64& rng) { return V(random_tensor(shape, rng), true); }

constexpr double kGradTol = 1e-4;

// ---------------------------------------------------------------- autograd

TEST(Autograd, SquareAtThreeHasGradientSix) {
  V x(Tensor<double>({1}, {3.0}), true);
  backward(mul(x, x));
  EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
}

TEST(Autograd, LinearMapGradientIsOuterStructureOfInput) {
  SplitMix64 rng(1);
  V x(random_tensor({1, 4}, rng));
  V w = param({4, 3}, rng);
  backward(sum(matmul(x, w)));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(w.grad()[i * 3 + j], x.value()[i]);
}

TEST(Autograd, NonScalarLossThrows) {
  V x(Tensor<double>({2}, {1.0, 2.0}), true);
  try {
    backward(scale(x, 2.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), "NotScalarLoss");
  }
}

TEST(Autograd, SharedSubexpressionAccumulates) {
  V x(Tensor<double>({1}, {2.0}), true);
  V y = mul(x, x);
  backward(add(y, y));  // 2x^2 -> 4x
  EXPECT_DOUBLE_EQ(x.grad()[0], 8.0);
}

TEST(Autograd, NoGradGuardRecordsConstants) {
  V x(Tensor<double>({1}, {2.0}), true);
  NoGradGuard guard;
  EXPECT_FALSE(mul(x, x).requires_grad());
}

TEST(GradCheck, LinearFunctionIsNearExact) {
  SplitMix64 rng(2);
  V x(random_tensor({3, 5}, rng));
  V w = param({5, 4}, rng), b = param({4}, rng);
  V r(random_tensor({3, 4}, rng));
  const double err = grad_check([&] { return sum(mul(linear(x, w, b), r)); }, {w, b});
  EXPECT_LT(err, 1e-9);
}

TEST(GradCheck, SoftmaxCrossEntropy) {
  SplitMix64 rng(3);
  V z = param({4, 6}, rng);
  const std::vector<std::size_t> y{0, 5, 2, 2};
  EXPECT_LT(grad_check([&] { return cross_entropy(z, y); }, {z}), 1e-6);
  V r(random_tensor({4, 6}, rng));
  EXPECT_LT(grad_check([&] { return sum(mul(softmax(z), r)); }, {z}), 1e-6);
}

// ------------------------------------------------------------- convolution

Tensor<double> conv_oracle(const Tensor<double>& x, const Tensor<double>& w, std::size_t stride, bool same) {
  const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3), K = w.dim(0), O = w.dim(3);
  std::size_t Ho, Wo, top = 0, left = 0;
  if (same) {
    Ho = (H + stride - 1) / stride;
    Wo = (W + stride - 1) / stride;
    const long ph = std::max<long>(0, static_cast<long>((Ho - 1) * stride + K) - static_cast<long>(H));
    const long pw = std::max<long>(0, static_cast<long>((Wo - 1) * stride + K) - static_cast<long>(W));
    top = static_cast<std::size_t>(ph / 2);
    left = static_cast<std::size_t>(pw / 2);
  } else {
    Ho = (H - K) / stride + 1;
    Wo = (W - K) / stride + 1;
  }
  // Explicitly zero-padded copy of the input.
  const std::size_t PH = H + K * 2, PW = W + K * 2;
  std::vector<double> padded(B * PH * PW * C, 0.0);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j)
        for (std::size_t c = 0; c < C; ++c)
          padded[((b * PH + i + top) * PW + j + left) * C + c] = x[((b * H + i) * W + j) * C + c];
  Tensor<double> out({B, Ho, Wo, O});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < Ho; ++i)
      for (std::size_t j = 0; j < Wo; ++j)
        for (std::size_t o = 0; o < O; ++o) {
          double acc = 0;
          for (std::size_t di = 0; di < K; ++di)
            for (std::size_t dj = 0; dj < K; ++dj)
              for (std::size_t c = 0; c < C; ++c)
                acc += padded[((b * PH + i * stride + di) * PW + j * stride + dj) * C + c] *
                       w[((di * K + dj) * C + c) * O + o];
          out[((b * Ho + i) * Wo + j) * O + o] = acc;
        }
  return out;
}

Tensor<double> pool_oracle(const Tensor<double>& x, std::size_t k, std::size_t s) {
  const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
  const std::size_t Ho = (H - k) / s + 1, Wo = (W - k) / s + 1;
  Tensor<double> out({B, Ho, Wo, C});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < Ho; ++i)
      for (std::size_t j = 0; j < Wo; ++j)
        for (std::size_t c = 0; c < C; ++c) {
          double m = -INFINITY;
          for (std::size_t di = 0; di < k; ++di)
            for (std::size_t dj = 0; dj < k; ++dj)
              m = std::max(m, x[((b * H + i * s + di) * W + j * s + dj) * C + c]);
          out[((b * Ho + i) * Wo + j) * C + c] = m;
        }
  return out;
}

TEST(Conv2d, UnitKernelIsIdentity) {
  SplitMix64 rng(4);
  V x(random_tensor({2, 5, 4, 1}, rng));
  V k(Tensor<double>({1, 1, 1, 1}, {1.0}));
  EXPECT_EQ(conv2d(x, k, 1, Padding::same).value(), x.value());
}

TEST(Conv2d, TwoByTwoDotProduct) {
  V x(Tensor<double>({1, 2, 2, 1}, {1, 2, 3, 4}));
  V k(Tensor<double>({2, 2, 1, 1}, {1, 0, 0, 1}));
  const auto y = conv2d(x, k, 1, Padding::valid);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(y.value()[0], 5.0);
}

TEST(Conv2d, SameSizing) {
  V x(Tensor<double>({1, 96, 96, 1}));
  V k(Tensor<double>({7, 7, 1, 2}));
  EXPECT_EQ(conv2d(x, k, 2, Padding::same).shape(), (Shape{1, 48, 48, 2}));
  EXPECT_EQ(conv2d(x, k, 1, Padding::same).shape(), (Shape{1, 96, 96, 2}));
  V odd(Tensor<double>({1, 13, 13, 1}));
  EXPECT_EQ(conv2d(odd, k, 2, Padding::same).shape(), (Shape{1, 7, 7, 2}));
}

TEST(Conv2d, ShapeErrors) {
  V x(Tensor<double>({1, 4, 4, 2}));
  EXPECT_THROW(conv2d(x, V(Tensor<double>({3, 3, 1, 1})), 1, Padding::same), Error);
  EXPECT_THROW(conv2d(x, V(Tensor<double>({5, 5, 2, 1})), 1, Padding::valid), Error);
}

TEST(Conv2d, MatchesLoopOracleOnRandomShapes) {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 1 + rng.below(4);
    const std::size_t h = k + rng.below(6), w = k + rng.below(6);
    const std::size_t cin = 1 + rng.below(3), cout = 1 + rng.below(3), stride = 1 + rng.below(3);
    const bool same = rng.below(2) == 0;
    // Small integers keep every product and sum exact in double.
    const auto x = random_ints({1 + rng.below(2), h, w, cin}, rng);
    const auto kern = random_ints({k, k, cin, cout}, rng);
    const auto got = conv2d(V(x), V(kern), stride, same ? Padding::same : Padding::valid).value();
    ASSERT_EQ(got, conv_oracle(x, kern, stride, same)) << "trial " << trial;
  }
}

TEST(Conv2d, OneHotMatchesDenseConvolution) {
  SplitMix64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng.below(5), classes = 2 + rng.below(6), stride = 1 + rng.below(3);
    const Shape bhw{1 + rng.below(2), k + rng.below(6), k + rng.below(6)};
    std::vector<std::uint8_t> idx(numel(bhw));
    Tensor<double> dense({bhw[0], bhw[1], bhw[2], classes});
    for (std::size_t i = 0; i < idx.size(); ++i) {
      idx[i] = static_cast<std::uint8_t>(rng.below(classes));
      dense[i * classes + idx[i]] = 1.0;
    }
    const auto kern = random_ints({k, k, classes, 3}, rng);
    const Padding pad = rng.below(2) ? Padding::same : Padding::valid;
    ASSERT_EQ(conv2d_one_hot<double>(idx, bhw, V(kern), stride, pad).value(),
              conv2d(V(dense), V(kern), stride, pad).value());
  }
}

TEST(MaxPool, Examples) {
  V constant(Tensor<double>({1, 4, 4, 1}, 7.0));
  const auto pooled = maxpool2d(constant, 2, 2).value();
  for (double v : pooled.values()) EXPECT_EQ(v, 7.0);
  V x(Tensor<double>({1, 2, 2, 1}, {1, 2, 3, 4}));
  EXPECT_EQ(maxpool2d(x, 2, 2).value().values()[0], 4.0);
  EXPECT_THROW(maxpool2d(x, 3, 1), Error);
}

TEST(MaxPool, MatchesWindowOracleOnRandomShapes) {
  SplitMix64 rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 1 + rng.below(4), s = 1 + rng.below(3);
    const auto x = random_tensor({1 + rng.below(2), k + rng.below(7), k + rng.below(7), 1 + rng.below(3)}, rng);
    ASSERT_EQ(maxpool2d(V(x), k, s).value(), pool_oracle(x, k, s)) << "trial " << trial;
  }
}

TEST(Patchify, TokenCounts) {
  V x(Tensor<double>({1, 96, 96, 1}));
  EXPECT_EQ(patchify(x, 16).shape(), (Shape{1, 36, 256}));
  EXPECT_EQ(patchify(x, 8).shape(), (Shape{1, 144, 64}));
  V small(Tensor<double>({1, 32, 32, 1}));
  EXPECT_EQ(patchify(small, 16).dim(1), 4u);
  EXPECT_THROW(patchify(small, 5), Error);
}

TEST(Patchify, RasterOrderWithinAndAcrossPatches) {
  Tensor<double> t({1, 4, 4, 1});
  std::iota(t.values().begin(), t.values().end(), 0.0);
  const auto p = patchify(V(t), 2).value();
  // Patch 1 is the top-right 2x2 block: cells 2, 3, 6, 7.
  EXPECT_EQ(p[4], 2.0);
  EXPECT_EQ(p[5], 3.0);
  EXPECT_EQ(p[6], 6.0);
  EXPECT_EQ(p[7], 7.0);
}

TEST(Shift2d, MovesDeltaSupport) {
  Tensor<double> t({1, 8, 8, 1});
  t[(3 * 8 + 4)] = 1.0;
  for (long dy : {-2L, 2L})
    for (long dx : {-2L, 2L}) {
      const auto out = shift2d(V(t), dy, dx).value();
      EXPECT_EQ(out[static_cast<std::size_t>((3 + dy) * 8 + 4 + dx)], 1.0);
      EXPECT_DOUBLE_EQ(std::accumulate(out.values().begin(), out.values().end(), 0.0), 1.0);
    }
}

// ----------------------------------------------------------- normalization

TEST(LayerNorm, Examples) {
  V g(Tensor<double>({2}, 1.0)), b(Tensor<double>({2}, 0.0));
  const auto c = layer_norm(V(Tensor<double>({1, 2}, 3.0)), g, b).value();
  EXPECT_EQ(c[0], 0.0);
  EXPECT_EQ(c[1], 0.0);
  const auto s = layer_norm(V(Tensor<double>({1, 2}, {1.0, -1.0})), g, b).value();
  EXPECT_NEAR(s[0], 1.0, 1e-5);
  EXPECT_NEAR(s[1], -1.0, 1e-5);
}

TEST(LayerNorm, MatchesMeanVarianceOracle) {
  SplitMix64 rng(7);
  const std::size_t d = 17;
  const auto x = random_tensor({3, d}, rng, -5, 5);
  V g(random_tensor({d}, rng)), b(random_tensor({d}, rng));
  const auto y = layer_norm(V(x), g, b).value();
  for (std::size_t r = 0; r < 3; ++r) {
    double mu = 0, var = 0;
    for (std::size_t i = 0; i < d; ++i) mu += x[r * d + i] / d;
    for (std::size_t i = 0; i < d; ++i) var += (x[r * d + i] - mu) * (x[r * d + i] - mu) / d;
    for (std::size_t i = 0; i < d; ++i) {
      const double want = (x[r * d + i] - mu) / std::sqrt(var + 1e-5) * g.value()[i] + b.value()[i];
      EXPECT_NEAR(y[r * d + i], want, 1e-6);
    }
  }
}

TEST(Softmax, RowsAreDistributions) {
  SplitMix64 rng(8);
  Var<float> x(random_tensor({10, 37}, rng, -50, 50).cast<float>());
  const auto p = softmax(x).value();
  for (std::size_t r = 0; r < 10; ++r) {
    double total = 0;
    for (std::size_t c = 0; c < 37; ++c) {
      EXPECT_GE(p[r * 37 + c], 0.0f);
      total += p[r * 37 + c];
    }
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(BatchNorm, TrainingUpdatesRunningStatistics) {
  SplitMix64 rng(9);
  V x(random_tensor({8, 3}, rng, 2, 4));
  V g(Tensor<double>({3}, 1.0)), b(Tensor<double>({3}, 0.0));
  Tensor<double> mean({3}), var({3}, 1.0);
  const auto y = batch_norm(x, g, b, mean, var, true).value();
  for (std::size_t c = 0; c < 3; ++c) {
    double m = 0;
    for (std::size_t r = 0; r < 8; ++r) m += y[r * 3 + c] / 8;
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_GT(mean[c], 0.2);
  }
}

// --------------------------------------------------------------- attention

TEST(Attention, EqualKeysAverageValues) {
  SplitMix64 rng(10);
  V q(Tensor<double>({1, 4, 6}, 0.5)), k(Tensor<double>({1, 4, 6}, 0.5));
  V v(random_tensor({1, 4, 6}, rng));
  const auto out = attention(q, k, v, AttentionOptions<double>{.heads = 2}).value();
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t j = 0; j < 6; ++j) {
      double m = 0;
      for (std::size_t s = 0; s < 4; ++s) m += v.value()[s * 6 + j] / 4;
      EXPECT_NEAR(out[t * 6 + j], m, 1e-12);
    }
}

TEST(Attention, DiagonalMaskOnTwoTokensSwaps) {
  SplitMix64 rng(11);
  V q(random_tensor({1, 2, 4}, rng)), k(random_tensor({1, 2, 4}, rng)), v(random_tensor({1, 2, 4}, rng));
  V tau(Tensor<double>({1}, 2.0), true);
  const auto out = attention(q, k, v, AttentionOptions<double>{.heads = 1, .mask_diagonal = true}, &tau).value();
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_DOUBLE_EQ(out[j], v.value()[4 + j]);
    EXPECT_DOUBLE_EQ(out[4 + j], v.value()[j]);
  }
}

TEST(Attention, MatchesSoftmaxMatmulOracle) {
  SplitMix64 rng(12);
  const std::size_t n = 3, d = 4;
  V q(random_tensor({1, n, d}, rng)), k(random_tensor({1, n, d}, rng)), v(random_tensor({1, n, d}, rng));
  const auto out = attention(q, k, v, AttentionOptions<double>{.heads = 1}).value();
  for (std::size_t i = 0; i < n; ++i) {
    double w[n], total = 0;
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0;
      for (std::size_t c = 0; c < d; ++c) dot += q.value()[i * d + c] * k.value()[j * d + c];
      w[j] = std::exp(dot / std::sqrt(double(d)));
      total += w[j];
    }
    for (std::size_t c = 0; c < d; ++c) {
      double want = 0;
      for (std::size_t j = 0; j < n; ++j) want += w[j] / total * v.value()[j * d + c];
      EXPECT_NEAR(out[i * d + c], want, 1e-6);
    }
  }
}

// ------------------------------------------------------------- grad checks

TEST(GradCheck, Elementwise) {
  SplitMix64 rng(13);
  V a = param({3, 4}, rng), b = param({3, 4}, rng), c = param({4}, rng);
  V r(random_tensor({3, 4}, rng));
  EXPECT_LT(grad_check([&] { return sum(mul(sub(mul(a, b), a), r)); }, {a, b}), kGradTol);
  EXPECT_LT(grad_check([&] { return sum(mul(scale(add_broadcast(a, c), 1.7), r)); }, {a, c}), kGradTol);
  EXPECT_LT(grad_check([&] { return sum(mul(gelu(a), r)); }, {a}), kGradTol);
  EXPECT_LT(grad_check([&] { return mean(mul(a, a)); }, {a}), kGradTol);
}

TEST(GradCheck, ReluAwayFromKink) {
  SplitMix64 rng(14);
  Tensor<double> t = random_tensor({20}, rng, 0.1, 1.0);
  for (std::size_t i = 0; i < t.size(); i += 2) t[i] = -t[i];
  V x(t, true);
  V r(random_tensor({20}, rng));
  EXPECT_LT(grad_check([&] { return sum(mul(relu(x), r)); }, {x}), kGradTol);
}

TEST(GradCheck, Structural) {
  SplitMix64 rng(15);
  V a = param({2, 3, 4}, rng), b = param({2, 2, 4}, rng), e = param({4}, rng);
  V r1(random_tensor({2, 5, 4}, rng)), r2(random_tensor({2, 3, 2}, rng)), r3(random_tensor({3, 2, 4}, rng));
  EXPECT_LT(grad_check([&] { return sum(mul(concat<double>({a, b}, 1), r1)); }, {a, b}), kGradTol);
  EXPECT_LT(grad_check([&] { return sum(mul(slice(a, 2, 1, 2), r2)); }, {a}), kGradTol);
  EXPECT_LT(grad_check([&] { return sum(mul(reshape(expand(e, {3, 2}), {3, 2, 4}), r3)); }, {e}), kGradTol);
}

TEST(GradCheck, LinearAlgebra) {
  SplitMix64 rng(16);
  V x = param({2, 3, 5}, rng), w = param({5, 4}, rng);
  V r(random_tensor({2, 3, 4}, rng));
  EXPECT_LT(grad_check([&] { return sum(mul(matmul(x, w), r)); }, {x, w}), kGradTol);
  for (bool ta : {false, true})
    for (bool tb : {false, true}) {
      V a = param(ta ? Shape{2, 5, 3} : Shape{2, 3, 5}, rng);
      V b = param(tb ? Shape{2, 4, 5} : Shape{2, 5, 4}, rng);
      EXPECT_LT(grad_check([&] { return sum(mul(bmm(a, b, ta, tb), r)); }, {a, b}), kGradTol)
          << ta << tb;
    }
}

TEST(GradCheck, Normalization) {
  SplitMix64 rng(17);
  V x = param({4, 6}, rng), g = param({6}, rng), b = param({6}, rng);
  V r(random_tensor({4, 6}, rng));
  EXPECT_LT(grad_check([&] { return sum(mul(layer_norm(x, g, b), r)); }, {x, g, b}), kGradTol);
  EXPECT_LT(grad_check([&] { return sum(mul(l2_normalize(x), r)); }, {x}), kGradTol);
  EXPECT_LT(grad_check(
                [&] {
                  Tensor<double> m({6}), v({6}, 1.0);
                  return sum(mul(batch_norm(x, g, b, m, v, true), r));
                },
                {x, g, b}),
            kGradTol);
  Tensor<double> m = random_tensor({6}, rng), v = random_tensor({6}, rng, 0.5, 2.0);
  EXPECT_LT(grad_check([&] { return sum(mul(batch_norm(x, g, b, m, v, false), r)); }, {x, g, b}), kGradTol);
}

TEST(GradCheck, ConvolutionAndPooling) {
  SplitMix64 rng(18);
  for (auto [k, stride, pad] : {std::tuple{3ul, 1ul, Padding::same}, std::tuple{3ul, 2ul, Padding::same},
                                std::tuple{2ul, 1ul, Padding::valid}, std::tuple{7ul, 2ul, Padding::same}}) {
    V x = param({2, 7, 6, 2}, rng), w = param({k, k, 2, 3}, rng);
    const Shape out = conv2d(x, w, stride, pad).shape();
    V r(random_tensor(out, rng));
    EXPECT_LT(grad_check([&] { return sum(mul(conv2d(x, w, stride, pad), r)); }, {x, w}), kGradTol);
  }
  {
    const std::vector<std::uint8_t> idx{0, 3, 1, 2, 2, 0, 3, 3, 1, 0, 1, 2};
    V w = param({3, 3, 4, 2}, rng);
    V r(random_tensor({1, 2, 2, 2}, rng));
    EXPECT_LT(grad_check([&] { return sum(mul(conv2d_one_hot<double>(idx, {1, 3, 4}, w, 2, Padding::same), r)); },
                         {w}),
              kGradTol);
  }
  // Distinct values keep the window maxima away from ties.
  Tensor<double> t({1, 6, 6, 2});
  std::vector<std::size_t> order(t.size());
  std::iota(order.begin(), order.end(), 0u);
  shuffle(std::span<std::size_t>(order), rng);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.1 * static_cast<double>(order[i]);
  V x(t, true);
  V r(random_tensor({1, 2, 2, 2}, rng));
  EXPECT_LT(grad_check([&] { return sum(mul(maxpool2d(x, 3, 2), r)); }, {x}), kGradTol);
}

TEST(GradCheck, PatchShiftEmbedding) {
  SplitMix64 rng(19);
  V x = param({2, 4, 4, 3}, rng);
  V r(random_tensor({2, 4, 12}, rng)), r2(random_tensor({2, 4, 4, 3}, rng));
  EXPECT_LT(grad_check([&] { return sum(mul(patchify(x, 2), r)); }, {x}), kGradTol);
  EXPECT_LT(grad_check([&] { return sum(mul(shift2d(x, 1, -2), r2)); }, {x}), kGradTol);
  V table = param({5, 3}, rng);
  const std::vector<std::size_t> idx{0, 4, 4, 2};
  V r3(random_tensor({4, 3}, rng));
  EXPECT_LT(grad_check([&] { return sum(mul(embedding<double>(idx, table), r3)); }, {table}), kGradTol);
}

TEST(GradCheck, AttentionVariants) {
  SplitMix64 rng(20);
  V q = param({2, 5, 8}, rng), k = param({2, 5, 8}, rng), v = param({2, 5, 8}, rng);
  V tau(Tensor<double>({1}, 1.7), true);
  V r(random_tensor({2, 5, 8}, rng));
  AttentionOptions<double> plain{.heads = 2};
  EXPECT_LT(grad_check([&] { return sum(mul(attention(q, k, v, plain), r)); }, {q, k, v}), kGradTol);
  AttentionOptions<double> lsa{.heads = 4, .mask_diagonal = true};
  EXPECT_LT(grad_check([&] { return sum(mul(attention(q, k, v, lsa, &tau), r)); }, {q, k, v, tau}), kGradTol);
  AttentionOptions<double> masked{.heads = 1, .mask = random_tensor({5, 5}, rng)};
  EXPECT_LT(grad_check([&] { return sum(mul(attention(q, k, v, masked), r)); }, {q, k, v}), kGradTol);
}

TEST(GradCheck, MarginSoftmaxAwayFromClamp) {
  SplitMix64 rng(21);
  // Moderate cosines: at s = 30 wider spreads push some softmax terms below
  // the resolution of the finite differences.
  V c(random_tensor({6, 5}, rng, -0.15, 0.15), true);
  const std::vector<std::size_t> y{0, 1, 2, 3, 4, 0};
  EXPECT_LT(grad_check([&] { return margin_softmax_loss(c, y, 30.0, 0.2); }, {c}), kGradTol);
  EXPECT_LT(grad_check([&] { return margin_softmax_loss(c, y, 1.0, 0.0); }, {c}), kGradTol);
  EXPECT_LT(grad_check([&] { return margin_softmax_loss(c, y, 5.0, 0.2); }, {c}), kGradTol);
}

TEST(Losses, LabelOutOfRange) {
  V z(Tensor<double>({1, 3}));
  const std::vector<std::size_t> y{3};
  try {
    cross_entropy(z, y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), "LabelOutOfRange");
  }
  EXPECT_THROW(margin_softmax_loss(z, y, 30.0, 0.2), Error);
}

TEST(Losses, ClampedTargetContributesNoSlope) {
  // theta + m >= pi: the target logit is pinned at -s.
  V c(Tensor<double>({1, 2}, {-0.999, 0.1}), true);
  const std::vector<std::size_t> y{0};
  backward(margin_softmax_loss(c, y, 30.0, 0.2));
  EXPECT_EQ(c.grad()[0], 0.0);
  EXPECT_GT(c.grad()[1], 0.0);
}

TEST(Determinism, RepeatedForwardIsBitwiseEqual) {
  SplitMix64 rng(22);
  Var<float> x(random_tensor({2, 12, 12, 3}, rng).cast<float>());
  Var<float> w(random_tensor({3, 3, 3, 4}, rng).cast<float>());
  const auto run = [&] {
    auto y = maxpool2d(relu(conv2d(x, w, 1, Padding::same)), 2, 2);
    auto t = reshape(y, {2, 36, 4});
    return attention(t, t, t, AttentionOptions<float>{.heads = 2}).value();
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
