#include <algorithm>
#include <cstdint>
#include <limits>

#include "cv4code/tensor/ops.hpp"
#include "detail.hpp"

namespace cv4code::tensor {

using detail::as_matrix;
using detail::input_grad;
using detail::input_value;
using detail::shape_error;

namespace {

struct ConvGeometry {
  std::size_t batch, h, w, cin, k, cout, stride;
  std::size_t out_h, out_w;
  std::size_t pad_top, pad_left;

  std::size_t patch() const { return k * k * cin; }
  std::size_t out_cells() const { return out_h * out_w; }
};

ConvGeometry conv_geometry(const Shape& in, const Shape& ker, std::size_t stride, Padding padding) {
  if (in.size() != 4 || ker.size() != 4) shape_error("conv2d", "expects B x H x W x C and K x K x Cin x Cout");
  if (ker[0] != ker[1]) shape_error("conv2d", "kernels must be square");
  if (ker[2] != in[3]) {
    shape_error("conv2d", "input has " + std::to_string(in[3]) + " channels, kernel expects " +
                              std::to_string(ker[2]));
  }
  if (stride == 0) shape_error("conv2d", "stride must be positive");
  ConvGeometry g{in[0], in[1], in[2], in[3], ker[0], ker[3], stride, 0, 0, 0, 0};
  if (padding == Padding::same) {
    g.out_h = (g.h + stride - 1) / stride;
    g.out_w = (g.w + stride - 1) / stride;
    const std::size_t need_h = (g.out_h - 1) * stride + g.k;
    const std::size_t need_w = (g.out_w - 1) * stride + g.k;
    g.pad_top = need_h > g.h ? (need_h - g.h) / 2 : 0;
    g.pad_left = need_w > g.w ? (need_w - g.w) / 2 : 0;
  } else {
    if (g.k > g.h || g.k > g.w) shape_error("conv2d", "kernel larger than input");
    g.out_h = (g.h - g.k) / stride + 1;
    g.out_w = (g.w - g.k) / stride + 1;
  }
  return g;
}

// Rows: output cells; columns: (kh, kw, cin).
template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* col) {
  const std::size_t patch = g.patch();
  for (std::size_t oh = 0; oh < g.out_h; ++oh) {
    for (std::size_t ow = 0; ow < g.out_w; ++ow) {
      T* row = col + (oh * g.out_w + ow) * patch;
      for (std::size_t kh = 0; kh < g.k; ++kh) {
        const long ih = static_cast<long>(oh * g.stride + kh) - static_cast<long>(g.pad_top);
        T* dst = row + kh * g.k * g.cin;
        if (ih < 0 || ih >= static_cast<long>(g.h)) {
          std::fill_n(dst, g.k * g.cin, T(0));
          continue;
        }
        for (std::size_t kw = 0; kw < g.k; ++kw) {
          const long iw = static_cast<long>(ow * g.stride + kw) - static_cast<long>(g.pad_left);
          if (iw < 0 || iw >= static_cast<long>(g.w)) {
            std::fill_n(dst + kw * g.cin, g.cin, T(0));
          } else {
            std::copy_n(image + (static_cast<std::size_t>(ih) * g.w + static_cast<std::size_t>(iw)) * g.cin,
                        g.cin, dst + kw * g.cin);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, T* image_grad) {
  const std::size_t patch = g.patch();
  for (std::size_t oh = 0; oh < g.out_h; ++oh) {
    for (std::size_t ow = 0; ow < g.out_w; ++ow) {
      const T* row = col + (oh * g.out_w + ow) * patch;
      for (std::size_t kh = 0; kh < g.k; ++kh) {
        const long ih = static_cast<long>(oh * g.stride + kh) - static_cast<long>(g.pad_top);
        if (ih < 0 || ih >= static_cast<long>(g.h)) continue;
        for (std::size_t kw = 0; kw < g.k; ++kw) {
          const long iw = static_cast<long>(ow * g.stride + kw) - static_cast<long>(g.pad_left);
          if (iw < 0 || iw >= static_cast<long>(g.w)) continue;
          T* dst = image_grad + (static_cast<std::size_t>(ih) * g.w + static_cast<std::size_t>(iw)) * g.cin;
          const T* src = row + (kh * g.k + kw) * g.cin;
          for (std::size_t c = 0; c < g.cin; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

// Calls fn(output offset, kernel row offset) for every in-bounds tap of a
// one-hot input; the kernel row is the weight vector of that tap's index.
template <typename Fn>
void for_each_tap(const ConvGeometry& g, std::span<const std::uint8_t> indices, Fn&& fn) {
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t oh = 0; oh < g.out_h; ++oh)
      for (std::size_t ow = 0; ow < g.out_w; ++ow) {
        const std::size_t o = ((b * g.out_h + oh) * g.out_w + ow) * g.cout;
        for (std::size_t kh = 0; kh < g.k; ++kh) {
          const long ih = static_cast<long>(oh * g.stride + kh) - static_cast<long>(g.pad_top);
          if (ih < 0 || ih >= static_cast<long>(g.h)) continue;
          for (std::size_t kw = 0; kw < g.k; ++kw) {
            const long iw = static_cast<long>(ow * g.stride + kw) - static_cast<long>(g.pad_left);
            if (iw < 0 || iw >= static_cast<long>(g.w)) continue;
            const std::size_t cell = (b * g.h + static_cast<std::size_t>(ih)) * g.w + static_cast<std::size_t>(iw);
            fn(o, ((kh * g.k + kw) * g.cin + indices[cell]) * g.cout);
          }
        }
      }
}

}  // namespace

template <typename T>
Var<T> conv2d(const Var<T>& input, const Var<T>& kernels, std::size_t stride, Padding padding) {
  const ConvGeometry g = conv_geometry(input.shape(), kernels.shape(), stride, padding);
  Tensor<T> out({g.batch, g.out_h, g.out_w, g.cout});
  std::vector<T> col(g.out_cells() * g.patch());
  const auto w = as_matrix(kernels.value(), g.patch(), g.cout);
  const std::size_t in_stride = g.h * g.w * g.cin;
  const std::size_t out_stride = g.out_cells() * g.cout;
  for (std::size_t b = 0; b < g.batch; ++b) {
    im2col(input.value().data() + b * in_stride, g, col.data());
    detail::ConstMatrixMap<T> cm(col.data(), static_cast<Eigen::Index>(g.out_cells()),
                                 static_cast<Eigen::Index>(g.patch()));
    as_matrix(out, g.out_cells(), g.cout, b * out_stride).noalias() = cm * w;
  }
  return record<T>(std::move(out), "conv2d", {input, kernels}, [g, in_stride, out_stride](Node<T>& self) {
    Tensor<T>* gx = input_grad(self, 0);
    Tensor<T>* gw = input_grad(self, 1);
    const auto& x = input_value(self, 0);
    const auto w = as_matrix(input_value(self, 1), g.patch(), g.cout);
    std::vector<T> col(g.out_cells() * g.patch());
    for (std::size_t b = 0; b < g.batch; ++b) {
      const auto dout = as_matrix(static_cast<const Tensor<T>&>(self.grad), g.out_cells(), g.cout, b * out_stride);
      detail::MatrixMap<T> cm(col.data(), static_cast<Eigen::Index>(g.out_cells()),
                              static_cast<Eigen::Index>(g.patch()));
      if (gw) {
        im2col(x.data() + b * in_stride, g, col.data());
        as_matrix(*gw, g.patch(), g.cout).noalias() += cm.transpose() * dout;
      }
      if (gx) {
        cm.noalias() = dout * w.transpose();
        col2im_add(col.data(), g, gx->data() + b * in_stride);
      }
    }
  });
}

template <typename T>
Var<T> conv2d_one_hot(std::span<const std::uint8_t> indices, const Shape& bhw, const Var<T>& kernels,
                      std::size_t stride, Padding padding) {
  if (bhw.size() != 3 || indices.size() != numel(bhw)) shape_error("conv2d_one_hot", "indices do not match B x H x W");
  const std::size_t classes = kernels.shape().size() == 4 ? kernels.dim(2) : 0;
  const ConvGeometry g = conv_geometry({bhw[0], bhw[1], bhw[2], classes}, kernels.shape(), stride, padding);
  for (std::uint8_t v : indices) {
    if (v >= classes) shape_error("conv2d_one_hot", "index " + std::to_string(v) + " >= " + std::to_string(classes));
  }
  Tensor<T> out({g.batch, g.out_h, g.out_w, g.cout});
  const T* w = kernels.value().data();
  for_each_tap(g, indices, [&](std::size_t o, std::size_t row) {
    for (std::size_t c = 0; c < g.cout; ++c) out[o + c] += w[row + c];
  });
  std::vector<std::uint8_t> saved(indices.begin(), indices.end());
  return record<T>(std::move(out), "conv2d_one_hot", {kernels}, [g, saved = std::move(saved)](Node<T>& self) {
    Tensor<T>* gw = input_grad(self, 0);
    if (!gw) return;
    for_each_tap(g, std::span<const std::uint8_t>(saved), [&](std::size_t o, std::size_t row) {
      for (std::size_t c = 0; c < g.cout; ++c) (*gw)[row + c] += self.grad[o + c];
    });
  });
}

template <typename T>
Var<T> maxpool2d(const Var<T>& input, std::size_t k, std::size_t stride) {
  const Shape& s = input.shape();
  if (s.size() != 4) shape_error("maxpool2d", "expects B x H x W x C");
  if (k == 0 || stride == 0 || k > s[1] || k > s[2]) {
    shape_error("maxpool2d", "window " + std::to_string(k) + " does not fit " + shape_string(s));
  }
  const std::size_t batch = s[0], h = s[1], w = s[2], c = s[3];
  const std::size_t oh = (h - k) / stride + 1, ow = (w - k) / stride + 1;
  Tensor<T> out({batch, oh, ow, c});
  std::vector<std::uint32_t> argmax(out.size());
  const T* x = input.value().data();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j)
        for (std::size_t ch = 0; ch < c; ++ch) {
          T best = -std::numeric_limits<T>::infinity();
          std::size_t best_at = 0;
          for (std::size_t di = 0; di < k; ++di)
            for (std::size_t dj = 0; dj < k; ++dj) {
              const std::size_t at = ((b * h + i * stride + di) * w + j * stride + dj) * c + ch;
              if (x[at] > best || (di == 0 && dj == 0)) {
                best = x[at];
                best_at = at;
              }
            }
          const std::size_t o = ((b * oh + i) * ow + j) * c + ch;
          out[o] = best;
          argmax[o] = static_cast<std::uint32_t>(best_at);
        }
  return record<T>(std::move(out), "maxpool2d", {input}, [argmax = std::move(argmax)](Node<T>& self) {
    if (auto* g = input_grad(self, 0))
      for (std::size_t o = 0; o < argmax.size(); ++o) (*g)[argmax[o]] += self.grad[o];
  });
}

template <typename T>
Var<T> patchify(const Var<T>& images, std::size_t patch) {
  const Shape& s = images.shape();
  if (s.size() != 4) shape_error("patchify", "expects B x H x W x C");
  if (patch == 0 || s[1] % patch != 0 || s[2] % patch != 0) {
    shape_error("patchify", "patch " + std::to_string(patch) + " does not divide " + shape_string(s));
  }
  const std::size_t batch = s[0], h = s[1], w = s[2], c = s[3];
  const std::size_t nh = h / patch, nw = w / patch, dim = patch * patch * c;
  // out index -> in index, shared by forward and backward
  std::vector<std::uint32_t> source(batch * nh * nw * dim);
  std::size_t o = 0;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t py = 0; py < nh; ++py)
      for (std::size_t px = 0; px < nw; ++px)
        for (std::size_t iy = 0; iy < patch; ++iy)
          for (std::size_t ix = 0; ix < patch; ++ix)
            for (std::size_t ch = 0; ch < c; ++ch)
              source[o++] = static_cast<std::uint32_t>(((b * h + py * patch + iy) * w + px * patch + ix) * c + ch);
  Tensor<T> out({batch, nh * nw, dim});
  for (std::size_t i = 0; i < source.size(); ++i) out[i] = images.value()[source[i]];
  return record<T>(std::move(out), "patchify", {images}, [source = std::move(source)](Node<T>& self) {
    if (auto* g = input_grad(self, 0))
      for (std::size_t i = 0; i < source.size(); ++i) (*g)[source[i]] += self.grad[i];
  });
}

template <typename T>
Var<T> shift2d(const Var<T>& images, long dy, long dx) {
  const Shape& s = images.shape();
  if (s.size() != 4) shape_error("shift2d", "expects B x H x W x C");
  const long h = static_cast<long>(s[1]), w = static_cast<long>(s[2]);
  const std::size_t c = s[3];
  Tensor<T> out(s);
  const auto copy_rows = [=](const T* src, T* dst, bool accumulate) {
    for (std::size_t b = 0; b < s[0]; ++b)
      for (long y = 0; y < h; ++y) {
        const long sy = y - dy;
        if (sy < 0 || sy >= h) continue;
        for (long x = 0; x < w; ++x) {
          const long sx = x - dx;
          if (sx < 0 || sx >= w) continue;
          const std::size_t from = ((b * s[1] + static_cast<std::size_t>(sy)) * s[2] + static_cast<std::size_t>(sx)) * c;
          const std::size_t to = ((b * s[1] + static_cast<std::size_t>(y)) * s[2] + static_cast<std::size_t>(x)) * c;
          // forward: dst[to] = src[from]; backward: grad_in[from] += grad_out[to]
          if (accumulate) {
            for (std::size_t ch = 0; ch < c; ++ch) dst[from + ch] += src[to + ch];
          } else {
            std::copy_n(src + from, c, dst + to);
          }
        }
      }
  };
  copy_rows(images.value().data(), out.data(), false);
  return record<T>(std::move(out), "shift2d", {images}, [copy_rows](Node<T>& self) {
    if (auto* g = input_grad(self, 0)) copy_rows(self.grad.data(), g->data(), true);
  });
}

#define CV4CODE_INSTANTIATE_CONV(T)                                            \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, std::size_t, Padding); \
  template Var<T> maxpool2d(const Var<T>&, std::size_t, std::size_t);         \
  template Var<T> conv2d_one_hot(std::span<const std::uint8_t>, const Shape&, const Var<T>&, std::size_t, Padding); \
  template Var<T> patchify(const Var<T>&, std::size_t);                       \
  template Var<T> shift2d(const Var<T>&, long, long);

CV4CODE_INSTANTIATE_CONV(float)
CV4CODE_INSTANTIATE_CONV(double)

}  // namespace cv4code::tensor
