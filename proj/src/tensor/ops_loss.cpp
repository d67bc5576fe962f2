#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cv4code/tensor/ops.hpp"
#include "detail.hpp"

namespace cv4code::tensor {

using detail::input_grad;
using detail::shape_error;

namespace {

void check_labels(const Shape& s, std::span<const std::size_t> labels, const char* op) {
  if (s.size() != 2) shape_error(op, "expects [B, C] logits, got " + shape_string(s));
  if (labels.size() != s[0]) {
    shape_error(op, std::to_string(labels.size()) + " labels for batch of " + std::to_string(s[0]));
  }
  for (std::size_t y : labels) {
    if (y >= s[1]) {
      throw Error("LabelOutOfRange", std::string(op) + ": label " + std::to_string(y) + " with " +
                                         std::to_string(s[1]) + " classes");
    }
  }
}

// Negative log-softmax of one row at y; writes softmax - onehot(y) into dz.
// When y is the argmax the loss is log1p(sum_{j != y} exp(z_j - z_y)), which
// keeps full precision for confident rows.
template <typename T>
T nll_row(const T* z, std::size_t classes, std::size_t y, T* dz) {
  const T top = *std::max_element(z, z + classes);
  if (z[y] >= top) {
    T rest = 0;
    for (std::size_t j = 0; j < classes; ++j) {
      if (j == y) continue;
      dz[j] = std::exp(z[j] - z[y]);
      rest += dz[j];
    }
    const T denom = 1 + rest;
    for (std::size_t j = 0; j < classes; ++j)
      if (j != y) dz[j] /= denom;
    dz[y] = -rest / denom;
    return std::log1p(rest);
  }
  T total = 0;
  for (std::size_t j = 0; j < classes; ++j) {
    dz[j] = std::exp(z[j] - top);
    total += dz[j];
  }
  for (std::size_t j = 0; j < classes; ++j) dz[j] /= total;
  dz[y] -= 1;
  return top + std::log(total) - z[y];
}

}  // namespace

template <typename T>
Var<T> cross_entropy(const Var<T>& logits, std::span<const std::size_t> labels) {
  const Shape& s = logits.shape();
  check_labels(s, labels, "cross_entropy");
  const std::size_t batch = s[0], classes = s[1];
  auto dz = std::make_shared<Tensor<T>>(s);
  T loss = 0;
  for (std::size_t b = 0; b < batch; ++b)
    loss += nll_row(logits.value().data() + b * classes, classes, labels[b], dz->data() + b * classes);
  loss /= static_cast<T>(batch);
  return record<T>(Tensor<T>({1}, std::vector<T>{loss}), "cross_entropy", {logits}, [dz, batch](Node<T>& self) {
    if (auto* g = input_grad(self, 0)) {
      const T f = self.grad[0] / static_cast<T>(batch);
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += f * (*dz)[i];
    }
  });
}

template <typename T>
Var<T> margin_softmax_loss(const Var<T>& cosines, std::span<const std::size_t> labels, T scale, T margin) {
  const Shape& s = cosines.shape();
  check_labels(s, labels, "margin_softmax_loss");
  const std::size_t batch = s[0], classes = s[1];
  const T pi = std::numbers::pi_v<T>;
  // sin(theta) floor for the target derivative near cos = 1
  const T sin_floor = std::sqrt(std::numeric_limits<T>::epsilon());

  Tensor<T> z(s);
  std::vector<T> target_slope(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const T* c = cosines.value().data() + b * classes;
    for (std::size_t j = 0; j < classes; ++j) z[b * classes + j] = scale * c[j];
    const std::size_t y = labels[b];
    const T cy = std::clamp(c[y], T(-1), T(1));
    const T theta = std::acos(cy);
    if (margin == 0) {
      z[b * classes + y] = scale * c[y];
      target_slope[b] = 1;
    } else if (theta + margin >= pi) {
      z[b * classes + y] = -scale;
      target_slope[b] = 0;
    } else {
      z[b * classes + y] = scale * std::cos(theta + margin);
      target_slope[b] = std::sin(theta + margin) / std::max(std::sin(theta), sin_floor);
    }
  }
  auto dz = std::make_shared<Tensor<T>>(s);
  T loss = 0;
  for (std::size_t b = 0; b < batch; ++b)
    loss += nll_row(z.data() + b * classes, classes, labels[b], dz->data() + b * classes);
  loss /= static_cast<T>(batch);
  std::vector<std::size_t> ys(labels.begin(), labels.end());
  return record<T>(Tensor<T>({1}, std::vector<T>{loss}), "margin_softmax_loss", {cosines},
                   [dz, ys = std::move(ys), slope = std::move(target_slope), scale, classes](Node<T>& self) {
                     auto* g = input_grad(self, 0);
                     if (!g) return;
                     const T f = self.grad[0] * scale / static_cast<T>(ys.size());
                     for (std::size_t b = 0; b < ys.size(); ++b)
                       for (std::size_t j = 0; j < classes; ++j) {
                         const std::size_t i = b * classes + j;
                         (*g)[i] += f * (*dz)[i] * (j == ys[b] ? slope[b] : T(1));
                       }
                   });
}

template Var<float> cross_entropy(const Var<float>&, std::span<const std::size_t>);
template Var<double> cross_entropy(const Var<double>&, std::span<const std::size_t>);
template Var<float> margin_softmax_loss(const Var<float>&, std::span<const std::size_t>, float, float);
template Var<double> margin_softmax_loss(const Var<double>&, std::span<const std::size_t>, double, double);

}  // namespace cv4code::tensor
