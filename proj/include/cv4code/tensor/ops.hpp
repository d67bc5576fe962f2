#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cv4code/common/rng.hpp"
#include "cv4code/tensor/autograd.hpp"

namespace cv4code::tensor {

// All ops are differentiable in every Var argument and instantiated for
// float and double. Image tensors are channels-last: B x H x W x C.

// --- elementwise and structural -------------------------------------------

template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> scale(const Var<T>& a, T factor);

/// x + y where y's shape equals the trailing dimensions of x.
template <typename T> Var<T> add_broadcast(const Var<T>& x, const Var<T>& y);

template <typename T> Var<T> relu(const Var<T>& x);
/// Exact (erf) gaussian-error linear unit.
template <typename T> Var<T> gelu(const Var<T>& x);

template <typename T> Var<T> reshape(const Var<T>& x, Shape shape);
template <typename T> Var<T> concat(const std::vector<Var<T>>& parts, std::size_t axis);
template <typename T> Var<T> slice(const Var<T>& x, std::size_t axis, std::size_t start, std::size_t length);
/// Repeats x under extra leading dimensions: [d...] -> [leading..., d...].
template <typename T> Var<T> expand(const Var<T>& x, const Shape& leading);

template <typename T> Var<T> sum(const Var<T>& x);
template <typename T> Var<T> mean(const Var<T>& x);

// --- linear algebra ----------------------------------------------------------

/// [..., K] x [K, N] -> [..., N].
template <typename T> Var<T> matmul(const Var<T>& x, const Var<T>& w);
/// matmul plus bias [N].
template <typename T> Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b);
/// Batched [G, M, K] x [G, K, N] -> [G, M, N], optionally transposing either operand's
/// last two axes.
template <typename T>
Var<T> bmm(const Var<T>& a, const Var<T>& b, bool transpose_a = false, bool transpose_b = false);

// --- normalization -----------------------------------------------------------

/// Softmax over the last axis.
template <typename T> Var<T> softmax(const Var<T>& x);

/// Normalizes over the last axis, then gamma * x_hat + beta.
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps = T(1e-5));

/// Per-channel (last axis) normalization over all other axes. In training
/// mode uses batch statistics and updates the running buffers.
template <typename T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, Tensor<T>& running_mean,
                  Tensor<T>& running_var, bool training, T momentum = T(0.1), T eps = T(1e-5));

/// Unit L2 norm along the last axis.
template <typename T> Var<T> l2_normalize(const Var<T>& x);

// --- convolution and pooling -------------------------------------------------

enum class Padding { same, valid };

/// Cross-correlation of B x H x W x Cin with K x K x Cin x Cout kernels.
/// Same padding puts the odd extra row/column at the bottom/right.
template <typename T>
Var<T> conv2d(const Var<T>& input, const Var<T>& kernels, std::size_t stride, Padding padding);

/// conv2d applied to the one-hot encoding of `indices` (B x H x W cells,
/// each < Cin of the kernels) without materializing it. Differentiable in
/// the kernels only.
template <typename T>
Var<T> conv2d_one_hot(std::span<const std::uint8_t> indices, const Shape& bhw, const Var<T>& kernels,
                      std::size_t stride, Padding padding);

/// Floor-mode K x K max pool; ties go to the first element in raster order.
template <typename T> Var<T> maxpool2d(const Var<T>& input, std::size_t k, std::size_t stride);

/// B x H x W x C -> B x (H/p)(W/p) x (p*p*C), raster order over patches,
/// (row, col, channel) order within a patch.
template <typename T> Var<T> patchify(const Var<T>& images, std::size_t patch);

/// out[b, h, w] = in[b, h - dy, w - dx], zero outside the image.
template <typename T> Var<T> shift2d(const Var<T>& images, long dy, long dx);

/// Rows of `table` ([V, E]) selected by `indices` -> [n, E].
template <typename T> Var<T> embedding(std::span<const std::size_t> indices, const Var<T>& table);

/// Inverted dropout: zeroes with probability p, scales survivors by 1/(1-p).
template <typename T> Var<T> dropout(const Var<T>& x, double p, SplitMix64& rng);

// --- attention ---------------------------------------------------------------

template <typename T>
struct AttentionOptions {
  std::size_t heads = 1;
  /// Locality self-attention: the score diagonal is masked to -inf.
  bool mask_diagonal = false;
  /// Optional additive [T, T] mask applied to every head.
  std::optional<Tensor<T>> mask;
};

/// Multi-head softmax(Q K^T / temperature + mask) V over [B, T, D] inputs.
/// `temperature` is a learnable scalar Var when set, otherwise sqrt(D / heads).
template <typename T>
Var<T> attention(const Var<T>& q, const Var<T>& k, const Var<T>& v, const AttentionOptions<T>& options,
                 const Var<T>* temperature = nullptr);

// --- losses ------------------------------------------------------------------

/// Mean negative log-softmax of logits [B, C] at the labels.
template <typename T> Var<T> cross_entropy(const Var<T>& logits, std::span<const std::size_t> labels);

/// Additive angular margin softmax over cosine logits [B, C]: the target
/// angle is widened by `margin` (clamped at pi) and all logits are scaled by
/// `scale` before the mean negative log-softmax. Throws LabelOutOfRange.
template <typename T>
Var<T> margin_softmax_loss(const Var<T>& cosines, std::span<const std::size_t> labels, T scale, T margin);

}  // namespace cv4code::tensor
