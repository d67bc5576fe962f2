#include <algorithm>
#include <cmath>
#include <numbers>

#include "cv4code/tensor/ops.hpp"
#include "detail.hpp"

namespace cv4code::tensor {

using detail::as_matrix;
using detail::input_grad;
using detail::input_value;
using detail::shape_error;

namespace {

template <typename T>
void require_same_shape(const char* op, const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape()) {
    shape_error(op, shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

}  // namespace

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape("add", a, b);
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return record<T>(std::move(out), "add", {a, b}, [](Node<T>& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (auto* g = input_grad(self, k))
        for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    }
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  require_same_shape("sub", a, b);
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return record<T>(std::move(out), "sub", {a, b}, [](Node<T>& self) {
    if (auto* g = input_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    if (auto* g = input_grad(self, 1))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= self.grad[i];
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same_shape("mul", a, b);
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return record<T>(std::move(out), "mul", {a, b}, [](Node<T>& self) {
    const auto& av = input_value(self, 0);
    const auto& bv = input_value(self, 1);
    if (auto* g = input_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * bv[i];
    if (auto* g = input_grad(self, 1))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * av[i];
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T factor) {
  Tensor<T> out = a.value();
  for (auto& v : out.values()) v *= factor;
  return record<T>(std::move(out), "scale", {a}, [factor](Node<T>& self) {
    if (auto* g = input_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * factor;
  });
}

template <typename T>
Var<T> add_broadcast(const Var<T>& x, const Var<T>& y) {
  const Shape& xs = x.shape();
  const Shape& ys = y.shape();
  if (ys.size() > xs.size() || !std::equal(ys.rbegin(), ys.rend(), xs.rbegin())) {
    shape_error("add_broadcast", shape_string(ys) + " is not a suffix of " + shape_string(xs));
  }
  const std::size_t inner = y.value().size();
  Tensor<T> out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += y.value()[i % inner];
  return record<T>(std::move(out), "add_broadcast", {x, y}, [inner](Node<T>& self) {
    if (auto* g = input_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    if (auto* g = input_grad(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i % inner] += self.grad[i];
  });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  Tensor<T> out = x.value();
  for (auto& v : out.values()) v = v > T{0} ? v : T{0};
  return record<T>(std::move(out), "relu", {x}, [](Node<T>& self) {
    if (auto* g = input_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i)
        if (self.value[i] > T{0}) (*g)[i] += self.grad[i];
  });
}

template <typename T>
Var<T> gelu(const Var<T>& x) {
  constexpr T inv_sqrt2 = T(0.70710678118654752440);
  const T inv_sqrt_2pi = T(1) / std::sqrt(T(2) * std::numbers::pi_v<T>);
  Tensor<T> out = x.value();
  for (auto& v : out.values()) v = T(0.5) * v * (T(1) + std::erf(v * inv_sqrt2));
  return record<T>(std::move(out), "gelu", {x}, [inv_sqrt_2pi](Node<T>& self) {
    if (auto* g = input_grad(self, 0)) {
      const auto& xv = input_value(self, 0);
      for (std::size_t i = 0; i < g->size(); ++i) {
        const T v = xv[i];
        const T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
        const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
        (*g)[i] += self.grad[i] * (cdf + v * pdf);
      }
    }
  });
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  Tensor<T> out = x.value().reshaped(std::move(shape));
  return record<T>(std::move(out), "reshape", {x}, [](Node<T>& self) {
    if (auto* g = input_grad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
  });
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, std::size_t axis) {
  if (parts.empty()) shape_error("concat", "no inputs");
  Shape shape = parts[0].shape();
  if (axis >= shape.size()) shape_error("concat", "axis out of range");
  std::size_t total = 0;
  for (const auto& p : parts) {
    Shape s = p.shape();
    if (s.size() != shape.size()) shape_error("concat", "rank mismatch");
    total += s[axis];
    s[axis] = shape[axis];
    if (s != shape) shape_error("concat", "non-axis dimensions differ");
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  shape[axis] = total;

  Tensor<T> out(shape);
  std::vector<std::size_t> widths;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.shape()[axis] * inner;
    widths.push_back(w);
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(p.value().data() + o * w, w, out.data() + o * total * inner + offset);
    }
    offset += w;
  }
  return record<T>(std::move(out), "concat", parts, [widths, outer, row = total * inner](Node<T>& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      if (auto* g = input_grad(self, k)) {
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t i = 0; i < widths[k]; ++i) (*g)[o * widths[k] + i] += self.grad[o * row + off + i];
      }
      off += widths[k];
    }
  });
}

template <typename T>
Var<T> slice(const Var<T>& x, std::size_t axis, std::size_t start, std::size_t length) {
  Shape shape = x.shape();
  if (axis >= shape.size() || start + length > shape[axis] || length == 0) {
    shape_error("slice", "range out of bounds for " + shape_string(shape));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  const std::size_t src_row = shape[axis] * inner;
  const std::size_t dst_row = length * inner;
  shape[axis] = length;
  Tensor<T> out(shape);
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(x.value().data() + o * src_row + start * inner, dst_row, out.data() + o * dst_row);
  }
  return record<T>(std::move(out), "slice", {x}, [=](Node<T>& self) {
    if (auto* g = input_grad(self, 0))
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < dst_row; ++i) (*g)[o * src_row + start * inner + i] += self.grad[o * dst_row + i];
  });
}

template <typename T>
Var<T> expand(const Var<T>& x, const Shape& leading) {
  Shape shape = leading;
  shape.insert(shape.end(), x.shape().begin(), x.shape().end());
  const std::size_t inner = x.value().size();
  Tensor<T> out(shape);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i % inner];
  return record<T>(std::move(out), "expand", {x}, [inner](Node<T>& self) {
    if (auto* g = input_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i % inner] += self.grad[i];
  });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  T total = 0;
  for (T v : x.value().values()) total += v;
  return record<T>(Tensor<T>({1}, {total}), "sum", {x}, [](Node<T>& self) {
    if (auto* g = input_grad(self, 0))
      for (auto& v : g->values()) v += self.grad[0];
  });
}

template <typename T>
Var<T> mean(const Var<T>& x) {
  const T n = static_cast<T>(x.value().size());
  return scale(sum(x), T(1) / n);
}

template <typename T>
Var<T> matmul(const Var<T>& x, const Var<T>& w) {
  if (w.shape().size() != 2 || x.shape().empty() || x.shape().back() != w.dim(0)) {
    shape_error("matmul", shape_string(x.shape()) + " x " + shape_string(w.shape()));
  }
  const std::size_t k = w.dim(0), n = w.dim(1), m = x.value().size() / k;
  Shape shape = x.shape();
  shape.back() = n;
  Tensor<T> out(shape);
  as_matrix(out, m, n).noalias() = as_matrix(x.value(), m, k) * as_matrix(w.value(), k, n);
  return record<T>(std::move(out), "matmul", {x, w}, [m, k, n](Node<T>& self) {
    const auto dout = as_matrix(static_cast<const Tensor<T>&>(self.grad), m, n);
    if (auto* g = input_grad(self, 0))
      as_matrix(*g, m, k).noalias() += dout * as_matrix(input_value(self, 1), k, n).transpose();
    if (auto* g = input_grad(self, 1))
      as_matrix(*g, k, n).noalias() += as_matrix(input_value(self, 0), m, k).transpose() * dout;
  });
}

template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  return add_broadcast(matmul(x, w), b);
}

template <typename T>
Var<T> bmm(const Var<T>& a, const Var<T>& b, bool ta, bool tb) {
  if (a.shape().size() != 3 || b.shape().size() != 3 || a.dim(0) != b.dim(0)) {
    shape_error("bmm", shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  const std::size_t groups = a.dim(0);
  const std::size_t ar = a.dim(1), ac = a.dim(2), br = b.dim(1), bc = b.dim(2);
  const std::size_t m = ta ? ac : ar, k = ta ? ar : ac;
  const std::size_t k2 = tb ? bc : br, n = tb ? br : bc;
  if (k != k2) shape_error("bmm", "inner dimensions differ");
  Tensor<T> out({groups, m, n});
  for (std::size_t g = 0; g < groups; ++g) {
    const auto am = as_matrix(a.value(), ar, ac, g * ar * ac);
    const auto bm = as_matrix(b.value(), br, bc, g * br * bc);
    auto om = as_matrix(out, m, n, g * m * n);
    if (ta && tb) om.noalias() = am.transpose() * bm.transpose();
    else if (ta) om.noalias() = am.transpose() * bm;
    else if (tb) om.noalias() = am * bm.transpose();
    else om.noalias() = am * bm;
  }
  return record<T>(std::move(out), "bmm", {a, b}, [=](Node<T>& self) {
    const auto& av = input_value(self, 0);
    const auto& bv = input_value(self, 1);
    Tensor<T>* ga = input_grad(self, 0);
    Tensor<T>* gb = input_grad(self, 1);
    for (std::size_t g = 0; g < groups; ++g) {
      const auto dout = as_matrix(static_cast<const Tensor<T>&>(self.grad), m, n, g * m * n);
      const auto am = as_matrix(av, ar, ac, g * ar * ac);
      const auto bm = as_matrix(bv, br, bc, g * br * bc);
      // op(A) = dims m x k, op(B) = k x n; d op(A) = dout op(B)^T, d op(B) = op(A)^T dout.
      if (ga) {
        auto gm = as_matrix(*ga, ar, ac, g * ar * ac);
        if (!ta && !tb) gm.noalias() += dout * bm.transpose();
        else if (!ta && tb) gm.noalias() += dout * bm;
        else if (ta && !tb) gm.noalias() += bm * dout.transpose();
        else gm.noalias() += bm.transpose() * dout.transpose();
      }
      if (gb) {
        auto gm = as_matrix(*gb, br, bc, g * br * bc);
        if (!ta && !tb) gm.noalias() += am.transpose() * dout;
        else if (!ta && tb) gm.noalias() += dout.transpose() * am;
        else if (ta && !tb) gm.noalias() += am * dout;
        else gm.noalias() += dout.transpose() * am.transpose();
      }
    }
  });
}

template <typename T>
Var<T> softmax(const Var<T>& x) {
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.value().size() / n;
  Tensor<T> out = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    T* row = out.data() + r * n;
    const T mx = *std::max_element(row, row + n);
    T total = 0;
    for (std::size_t i = 0; i < n; ++i) total += (row[i] = std::exp(row[i] - mx));
    for (std::size_t i = 0; i < n; ++i) row[i] /= total;
  }
  return record<T>(std::move(out), "softmax", {x}, [rows, n](Node<T>& self) {
    auto* g = input_grad(self, 0);
    if (!g) return;
    for (std::size_t r = 0; r < rows; ++r) {
      const T* y = self.value.data() + r * n;
      const T* dy = self.grad.data() + r * n;
      T dot = 0;
      for (std::size_t i = 0; i < n; ++i) dot += dy[i] * y[i];
      for (std::size_t i = 0; i < n; ++i) (*g)[r * n + i] += y[i] * (dy[i] - dot);
    }
  });
}

template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps) {
  const std::size_t n = x.shape().back();
  if (gamma.shape() != Shape{n} || beta.shape() != Shape{n}) {
    shape_error("layer_norm", "affine parameters must have shape [" + std::to_string(n) + "]");
  }
  const std::size_t rows = x.value().size() / n;
  Tensor<T> x_hat(x.shape());
  std::vector<T> rstd(rows);
  Tensor<T> out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.value().data() + r * n;
    T mu = 0;
    for (std::size_t i = 0; i < n; ++i) mu += xr[i];
    mu /= static_cast<T>(n);
    T var = 0;
    for (std::size_t i = 0; i < n; ++i) var += (xr[i] - mu) * (xr[i] - mu);
    var /= static_cast<T>(n);
    rstd[r] = T(1) / std::sqrt(var + eps);
    for (std::size_t i = 0; i < n; ++i) {
      const T h = (xr[i] - mu) * rstd[r];
      x_hat[r * n + i] = h;
      out[r * n + i] = h * gamma.value()[i] + beta.value()[i];
    }
  }
  return record<T>(std::move(out), "layer_norm", {x, gamma, beta},
                   [x_hat = std::move(x_hat), rstd = std::move(rstd), rows, n](Node<T>& self) {
    const auto& gv = input_value(self, 1);
    Tensor<T>* gx = input_grad(self, 0);
    Tensor<T>* gg = input_grad(self, 1);
    Tensor<T>* gb = input_grad(self, 2);
    std::vector<T> dxh(n);
    for (std::size_t r = 0; r < rows; ++r) {
      const T* dy = self.grad.data() + r * n;
      const T* h = x_hat.data() + r * n;
      T sum_d = 0, sum_dh = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (gg) (*gg)[i] += dy[i] * h[i];
        if (gb) (*gb)[i] += dy[i];
        dxh[i] = dy[i] * gv[i];
        sum_d += dxh[i];
        sum_dh += dxh[i] * h[i];
      }
      if (gx) {
        const T inv_n = T(1) / static_cast<T>(n);
        for (std::size_t i = 0; i < n; ++i)
          (*gx)[r * n + i] += rstd[r] * (dxh[i] - inv_n * sum_d - h[i] * inv_n * sum_dh);
      }
    }
  });
}

template <typename T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, Tensor<T>& running_mean,
                  Tensor<T>& running_var, bool training, T momentum, T eps) {
  const std::size_t c = x.shape().back();
  const std::size_t rows = x.value().size() / c;
  if (gamma.shape() != Shape{c} || beta.shape() != Shape{c} || running_mean.size() != c ||
      running_var.size() != c) {
    shape_error("batch_norm", "per-channel tensors must have " + std::to_string(c) + " entries");
  }
  std::vector<T> mu(c, 0), rstd(c);
  if (training) {
    if (rows < 2) shape_error("batch_norm", "training mode needs at least two rows per channel");
    std::vector<T> var(c, 0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < c; ++j) mu[j] += x.value()[r * c + j];
    for (auto& m : mu) m /= static_cast<T>(rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < c; ++j) {
        const T d = x.value()[r * c + j] - mu[j];
        var[j] += d * d;
      }
    for (std::size_t j = 0; j < c; ++j) {
      var[j] /= static_cast<T>(rows);
      rstd[j] = T(1) / std::sqrt(var[j] + eps);
      const T unbiased = var[j] * static_cast<T>(rows) / static_cast<T>(rows - 1);
      running_mean[j] = (T(1) - momentum) * running_mean[j] + momentum * mu[j];
      running_var[j] = (T(1) - momentum) * running_var[j] + momentum * unbiased;
    }
  } else {
    for (std::size_t j = 0; j < c; ++j) {
      mu[j] = running_mean[j];
      rstd[j] = T(1) / std::sqrt(running_var[j] + eps);
    }
  }
  Tensor<T> x_hat(x.shape());
  Tensor<T> out(x.shape());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < c; ++j) {
      const T h = (x.value()[r * c + j] - mu[j]) * rstd[j];
      x_hat[r * c + j] = h;
      out[r * c + j] = h * gamma.value()[j] + beta.value()[j];
    }
  return record<T>(std::move(out), "batch_norm", {x, gamma, beta},
                   [x_hat = std::move(x_hat), rstd, rows, c, training](Node<T>& self) {
    const auto& gv = input_value(self, 1);
    Tensor<T>* gx = input_grad(self, 0);
    Tensor<T>* gg = input_grad(self, 1);
    Tensor<T>* gb = input_grad(self, 2);
    std::vector<T> sum_d(c, 0), sum_dh(c, 0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < c; ++j) {
        const T dy = self.grad[r * c + j];
        const T h = x_hat[r * c + j];
        if (gg) (*gg)[j] += dy * h;
        if (gb) (*gb)[j] += dy;
        sum_d[j] += dy * gv[j];
        sum_dh[j] += dy * gv[j] * h;
      }
    if (!gx) return;
    const T inv_n = T(1) / static_cast<T>(rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < c; ++j) {
        const T dxh = self.grad[r * c + j] * gv[j];
        if (training) {
          (*gx)[r * c + j] += rstd[j] * (dxh - inv_n * sum_d[j] - x_hat[r * c + j] * inv_n * sum_dh[j]);
        } else {
          (*gx)[r * c + j] += rstd[j] * dxh;
        }
      }
  });
}

template <typename T>
Var<T> l2_normalize(const Var<T>& x) {
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.value().size() / n;
  Tensor<T> out = x.value();
  std::vector<T> norms(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    T ss = 0;
    for (std::size_t i = 0; i < n; ++i) ss += out[r * n + i] * out[r * n + i];
    norms[r] = std::max(std::sqrt(ss), T(1e-12));
    for (std::size_t i = 0; i < n; ++i) out[r * n + i] /= norms[r];
  }
  return record<T>(std::move(out), "l2_normalize", {x}, [norms = std::move(norms), rows, n](Node<T>& self) {
    auto* g = input_grad(self, 0);
    if (!g) return;
    for (std::size_t r = 0; r < rows; ++r) {
      const T* y = self.value.data() + r * n;
      const T* dy = self.grad.data() + r * n;
      T dot = 0;
      for (std::size_t i = 0; i < n; ++i) dot += y[i] * dy[i];
      for (std::size_t i = 0; i < n; ++i) (*g)[r * n + i] += (dy[i] - y[i] * dot) / norms[r];
    }
  });
}

template <typename T>
Var<T> embedding(std::span<const std::size_t> indices, const Var<T>& table) {
  if (table.shape().size() != 2) shape_error("embedding", "table must be [V, E]");
  const std::size_t vocab = table.dim(0), e = table.dim(1);
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  Tensor<T> out({idx.size(), e});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= vocab) shape_error("embedding", "index out of range");
    std::copy_n(table.value().data() + idx[i] * e, e, out.data() + i * e);
  }
  return record<T>(std::move(out), "embedding", {table}, [idx = std::move(idx), e](Node<T>& self) {
    if (auto* g = input_grad(self, 0))
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < e; ++j) (*g)[idx[i] * e + j] += self.grad[i * e + j];
  });
}

template <typename T>
Var<T> dropout(const Var<T>& x, double p, SplitMix64& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw Error("InvalidConfig", "dropout probability must be below 1");
  const T keep_scale = T(1) / static_cast<T>(1.0 - p);
  std::vector<T> mask(x.value().size());
  Tensor<T> out = x.value();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = rng.uniform() < p ? T(0) : keep_scale;
    out[i] *= mask[i];
  }
  return record<T>(std::move(out), "dropout", {x}, [mask = std::move(mask)](Node<T>& self) {
    if (auto* g = input_grad(self, 0))
      for (std::size_t i = 0; i < mask.size(); ++i) (*g)[i] += self.grad[i] * mask[i];
  });
}

#define CV4CODE_INSTANTIATE_BASIC(T)                                                              \
  template Var<T> add(const Var<T>&, const Var<T>&);                                              \
  template Var<T> sub(const Var<T>&, const Var<T>&);                                              \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                              \
  template Var<T> scale(const Var<T>&, T);                                                        \
  template Var<T> add_broadcast(const Var<T>&, const Var<T>&);                                    \
  template Var<T> relu(const Var<T>&);                                                            \
  template Var<T> gelu(const Var<T>&);                                                            \
  template Var<T> reshape(const Var<T>&, Shape);                                                  \
  template Var<T> concat(const std::vector<Var<T>>&, std::size_t);                                \
  template Var<T> slice(const Var<T>&, std::size_t, std::size_t, std::size_t);                    \
  template Var<T> expand(const Var<T>&, const Shape&);                                            \
  template Var<T> sum(const Var<T>&);                                                             \
  template Var<T> mean(const Var<T>&);                                                            \
  template Var<T> matmul(const Var<T>&, const Var<T>&);                                           \
  template Var<T> linear(const Var<T>&, const Var<T>&, const Var<T>&);                            \
  template Var<T> bmm(const Var<T>&, const Var<T>&, bool, bool);                                  \
  template Var<T> softmax(const Var<T>&);                                                         \
  template Var<T> layer_norm(const Var<T>&, const Var<T>&, const Var<T>&, T);                     \
  template Var<T> batch_norm(const Var<T>&, const Var<T>&, const Var<T>&, Tensor<T>&, Tensor<T>&, \
                             bool, T, T);                                                         \
  template Var<T> l2_normalize(const Var<T>&);                                                    \
  template Var<T> embedding(std::span<const std::size_t>, const Var<T>&);                         \
  template Var<T> dropout(const Var<T>&, double, SplitMix64&);

CV4CODE_INSTANTIATE_BASIC(float)
CV4CODE_INSTANTIATE_BASIC(double)

}  // namespace cv4code::tensor
