#include <cmath>
#include <limits>

#include "cv4code/tensor/ops.hpp"
#include "detail.hpp"

namespace cv4code::tensor {

using detail::input_grad;
using detail::input_value;
using detail::Matrix;
using detail::shape_error;

namespace {

// Copies head h of a [B, T, D] tensor for batch b into a T x dh matrix.
template <typename T>
Matrix<T> head_slice(const Tensor<T>& x, std::size_t b, std::size_t h, std::size_t tokens, std::size_t dim,
                     std::size_t dh) {
  Matrix<T> out(static_cast<Eigen::Index>(tokens), static_cast<Eigen::Index>(dh));
  const T* base = x.data() + b * tokens * dim + h * dh;
  for (std::size_t t = 0; t < tokens; ++t)
    for (std::size_t j = 0; j < dh; ++j) out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = base[t * dim + j];
  return out;
}

template <typename T>
void head_add(Tensor<T>& x, const Matrix<T>& m, std::size_t b, std::size_t h, std::size_t tokens, std::size_t dim,
              std::size_t dh) {
  T* base = x.data() + b * tokens * dim + h * dh;
  for (std::size_t t = 0; t < tokens; ++t)
    for (std::size_t j = 0; j < dh; ++j) base[t * dim + j] += m(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
}

}  // namespace

template <typename T>
Var<T> attention(const Var<T>& q, const Var<T>& k, const Var<T>& v, const AttentionOptions<T>& options,
                 const Var<T>* temperature) {
  const Shape& s = q.shape();
  if (s.size() != 3 || k.shape() != s || v.shape() != s) {
    shape_error("attention", "q, k, v must share one [B, T, D] shape, got " + shape_string(s) + ", " +
                                 shape_string(k.shape()) + ", " + shape_string(v.shape()));
  }
  const std::size_t batch = s[0], tokens = s[1], dim = s[2], heads = options.heads;
  if (heads == 0 || dim % heads != 0) shape_error("attention", "depth not divisible by heads");
  if (options.mask && options.mask->shape() != Shape{tokens, tokens}) {
    shape_error("attention", "mask " + shape_string(options.mask->shape()) + " for " + std::to_string(tokens) +
                                 " tokens");
  }
  if (options.mask_diagonal && tokens < 2) shape_error("attention", "diagonal mask needs at least 2 tokens");
  if (temperature && temperature->value().size() != 1) shape_error("attention", "temperature must be scalar");
  const std::size_t dh = dim / heads;
  const T tau = temperature ? temperature->value()[0] : std::sqrt(static_cast<T>(dh));
  const auto n = static_cast<Eigen::Index>(tokens);

  Tensor<T> out(s);
  // Saved attention probabilities, one T x T block per (b, h).
  auto probs = std::make_shared<std::vector<Matrix<T>>>();
  probs->reserve(batch * heads);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      const Matrix<T> qh = head_slice(q.value(), b, h, tokens, dim, dh);
      const Matrix<T> kh = head_slice(k.value(), b, h, tokens, dim, dh);
      const Matrix<T> vh = head_slice(v.value(), b, h, tokens, dim, dh);
      Matrix<T> p = (qh * kh.transpose()) / tau;
      if (options.mask) p += detail::as_matrix(*options.mask, tokens, tokens);
      if (options.mask_diagonal) p.diagonal().setConstant(-std::numeric_limits<T>::infinity());
      for (Eigen::Index r = 0; r < n; ++r) {
        auto row = p.row(r);
        const T top = row.maxCoeff();
        row = (row.array() - top).exp();
        row /= row.sum();
      }
      Matrix<T> oh = p * vh;
      head_add(out, oh, b, h, tokens, dim, dh);
      probs->push_back(std::move(p));
    }
  }

  std::vector<Var<T>> inputs{q, k, v};
  if (temperature) inputs.push_back(*temperature);
  const bool learn_tau = temperature != nullptr;
  return record<T>(std::move(out), "attention", std::move(inputs),
                   [=](Node<T>& self) {
                     Tensor<T>* gq = input_grad(self, 0);
                     Tensor<T>* gk = input_grad(self, 1);
                     Tensor<T>* gv = input_grad(self, 2);
                     Tensor<T>* gt = learn_tau ? input_grad(self, 3) : nullptr;
                     const T t = learn_tau ? input_value(self, 3)[0] : tau;
                     T dtau = 0;
                     for (std::size_t b = 0; b < batch; ++b) {
                       for (std::size_t h = 0; h < heads; ++h) {
                         const Matrix<T>& p = (*probs)[b * heads + h];
                         const Matrix<T> dout = head_slice(self.grad, b, h, tokens, dim, dh);
                         const Matrix<T> qh = head_slice(input_value(self, 0), b, h, tokens, dim, dh);
                         const Matrix<T> kh = head_slice(input_value(self, 1), b, h, tokens, dim, dh);
                         const Matrix<T> vh = head_slice(input_value(self, 2), b, h, tokens, dim, dh);
                         if (gv) head_add(*gv, Matrix<T>(p.transpose() * dout), b, h, tokens, dim, dh);
                         const Matrix<T> dp = dout * vh.transpose();
                         Matrix<T> ds = p.cwiseProduct(dp);
                         const auto rows = ds.rowwise().sum().eval();
                         ds -= p.cwiseProduct(rows.replicate(1, n));
                         if (gq) head_add(*gq, Matrix<T>(ds * kh / t), b, h, tokens, dim, dh);
                         if (gk) head_add(*gk, Matrix<T>(ds.transpose() * qh / t), b, h, tokens, dim, dh);
                         if (gt) dtau -= ds.cwiseProduct(qh * kh.transpose()).sum() / (t * t);
                       }
                     }
                     if (gt) (*gt)[0] += dtau;
                   });
}

template Var<float> attention(const Var<float>&, const Var<float>&, const Var<float>&,
                              const AttentionOptions<float>&, const Var<float>*);
template Var<double> attention(const Var<double>&, const Var<double>&, const Var<double>&,
                               const AttentionOptions<double>&, const Var<double>*);

}  // namespace cv4code::tensor
