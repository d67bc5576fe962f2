#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cv4code/tensor/autograd.hpp"
#include "cv4code/training/config.hpp"

namespace cv4code::training {

using tensor::Tensor;
using tensor::Var;

/// Additive angular margin softmax over B x D embeddings and C x D class
/// weights. Both are L2-normalized by row; the target angle is widened by
/// cfg.margin, logits are scaled by cfg.scale, and the result is the mean
/// negative log-softmax. Throws LabelOutOfRange, ShapeMismatch.
template <typename T>
Var<T> aam_loss(const Var<T>& embeddings, const Var<T>& class_weights, std::span<const std::size_t> labels,
                const AamConfig& cfg);

/// The same objective on precomputed cosines (a model's forward output).
template <typename T>
Var<T> aam_loss_from_cosines(const Var<T>& cosines, std::span<const std::size_t> labels, const AamConfig& cfg);

/// Warmup then cosine annealing, counted in optimizer steps.
struct LrSchedule {
  double lr = 1e-3;
  std::size_t warmup_steps = 0;
  std::size_t total_steps = 1;
};

LrSchedule make_schedule(const TrainConfig& cfg, std::size_t steps_per_epoch);

/// lr * step / warmup during warmup, then lr * (1 + cos(pi * progress)) / 2
/// with progress reaching 1 at the final step (total_steps - 1).
double lr_at(std::size_t step, const LrSchedule& schedule);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  std::uint64_t step = 0;
};

/// One AdamW update: p *= 1 - lr * wd, then the bias-corrected Adam step.
/// A null gradient counts as zero. Moments are created on the first call.
/// Throws ShapeMismatch.
template <typename T>
void adamw_step(std::span<Tensor<T>* const> params, std::span<const Tensor<T>* const> grads, AdamState<T>& state,
                double lr, double weight_decay, const AdamOptions& options = {});

/// adamw_step on the values and accumulated gradients of `params`.
template <typename T>
void adamw_step(std::span<Var<T>> params, AdamState<T>& state, double lr, double weight_decay,
                const AdamOptions& options = {});

}  // namespace cv4code::training
