#include "cv4code/training/objective.hpp"

#include <cmath>
#include <numbers>

#include "cv4code/common/error.hpp"
#include "cv4code/tensor/ops.hpp"

namespace cv4code::training {

template <typename T>
Var<T> aam_loss(const Var<T>& embeddings, const Var<T>& class_weights, std::span<const std::size_t> labels,
                const AamConfig& cfg) {
  if (embeddings.shape().size() != 2 || class_weights.shape().size() != 2 ||
      embeddings.dim(1) != class_weights.dim(1)) {
    throw Error("ShapeMismatch", "embeddings [B, D] and class weights [C, D] required");
  }
  if (cfg.n_classes != 0 && cfg.n_classes != class_weights.dim(0)) {
    throw Error("ShapeMismatch", "class weights do not match n_classes");
  }
  const std::size_t b = embeddings.dim(0), c = class_weights.dim(0), d = embeddings.dim(1);
  const Var<T> e = tensor::reshape(tensor::l2_normalize(embeddings), {1, b, d});
  const Var<T> w = tensor::reshape(tensor::l2_normalize(class_weights), {1, c, d});
  return aam_loss_from_cosines(tensor::reshape(tensor::bmm(e, w, false, true), {b, c}), labels, cfg);
}

template <typename T>
Var<T> aam_loss_from_cosines(const Var<T>& cosines, std::span<const std::size_t> labels, const AamConfig& cfg) {
  validate(cfg);
  return tensor::margin_softmax_loss(cosines, labels, static_cast<T>(cfg.scale), static_cast<T>(cfg.margin));
}

LrSchedule make_schedule(const TrainConfig& cfg, std::size_t steps_per_epoch) {
  return {cfg.lr, cfg.warmup_epochs * steps_per_epoch, cfg.total_epochs * steps_per_epoch};
}

double lr_at(std::size_t step, const LrSchedule& s) {
  if (step < s.warmup_steps) return s.lr * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
  const std::size_t last = s.total_steps == 0 ? 0 : s.total_steps - 1;
  if (step >= last) return 0.0;
  const double progress = static_cast<double>(step - s.warmup_steps) / static_cast<double>(last - s.warmup_steps);
  return s.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

template <typename T>
void adamw_step(std::span<Tensor<T>* const> params, std::span<const Tensor<T>* const> grads, AdamState<T>& state,
                double lr, double weight_decay, const AdamOptions& o) {
  if (params.size() != grads.size()) throw Error("ShapeMismatch", "one gradient per parameter required");
  if (state.m.empty() && state.step == 0) {
    for (const Tensor<T>* p : params) {
      state.m.emplace_back(p->shape());
      state.v.emplace_back(p->shape());
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw Error("ShapeMismatch", "optimizer state does not match the parameter list");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].shape() != params[i]->shape() || state.v[i].shape() != params[i]->shape() ||
        (grads[i] && grads[i]->shape() != params[i]->shape())) {
      throw Error("ShapeMismatch", "parameter " + std::to_string(i) + " disagrees with its gradient or moments");
    }
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  const double decay = 1.0 - lr * weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    T* p = params[i]->data();
    T* m = state.m[i].data();
    T* v = state.v[i].data();
    const T* g = grads[i] ? grads[i]->data() : nullptr;
    for (std::size_t j = 0; j < params[i]->size(); ++j) {
      const double gj = g ? static_cast<double>(g[j]) : 0.0;
      const double mj = o.beta1 * m[j] + (1 - o.beta1) * gj;
      const double vj = o.beta2 * v[j] + (1 - o.beta2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double decayed = static_cast<double>(p[j]) * decay;
      p[j] = static_cast<T>(decayed - lr * (mj / c1) / (std::sqrt(vj / c2) + o.eps));
    }
  }
}

template <typename T>
void adamw_step(std::span<Var<T>> params, AdamState<T>& state, double lr, double weight_decay,
                const AdamOptions& options) {
  std::vector<Tensor<T>*> values;
  std::vector<const Tensor<T>*> grads;
  for (auto& p : params) {
    values.push_back(&p.mutable_value());
    grads.push_back(p.has_grad() ? &p.grad() : nullptr);
  }
  adamw_step<T>(values, grads, state, lr, weight_decay, options);
}

#define CV4CODE_INSTANTIATE_OBJECTIVE(T)                                                                          \
  template Var<T> aam_loss(const Var<T>&, const Var<T>&, std::span<const std::size_t>, const AamConfig&);        \
  template Var<T> aam_loss_from_cosines(const Var<T>&, std::span<const std::size_t>, const AamConfig&);          \
  template void adamw_step(std::span<Tensor<T>* const>, std::span<const Tensor<T>* const>, AdamState<T>&, double, \
                           double, const AdamOptions&);                                                           \
  template void adamw_step(std::span<Var<T>>, AdamState<T>&, double, double, const AdamOptions&);

CV4CODE_INSTANTIATE_OBJECTIVE(float)
CV4CODE_INSTANTIATE_OBJECTIVE(double)

}  // namespace cv4code::training
