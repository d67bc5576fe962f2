#include "cv4code/evalret/metrics.hpp"

#include <cmath>
#include <string>

#include "cv4code/common/error.hpp"

namespace cv4code::evalret {

template <typename T>
double topk_accuracy(const tensor::Tensor<T>& logits, std::span<const std::size_t> labels, std::size_t k) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
    throw Error("ShapeMismatch", "logits must be [labels, classes]");
  }
  const std::size_t rows = logits.dim(0), classes = logits.dim(1);
  if (k == 0 || k > classes) throw Error("ShapeMismatch", "k must be in [1, " + std::to_string(classes) + "]");
  if (rows == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t y = labels[r];
    if (y >= classes) throw Error("LabelOutOfRange", "label " + std::to_string(y));
    const T* row = logits.data() + r * classes;
    std::size_t ahead = 0;
    for (std::size_t c = 0; c < classes; ++c) ahead += row[c] > row[y] || (row[c] == row[y] && c < y);
    hits += ahead < k;
  }
  return static_cast<double>(hits) / static_cast<double>(rows);
}

namespace {

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) throw Error("ShapeMismatch", "vectors differ in length");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += double(a[i]) * double(b[i]);
    na += double(a[i]) * double(a[i]);
    nb += double(b[i]) * double(b[i]);
  }
  if (na == 0 || nb == 0) throw Error("ZeroVector", "cosine of a zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

double cosine(std::span<const double> a, std::span<const double> b) { return cosine_impl(a, b); }
double cosine(std::span<const float> a, std::span<const float> b) { return cosine_impl(a, b); }

template double topk_accuracy(const tensor::Tensor<float>&, std::span<const std::size_t>, std::size_t);
template double topk_accuracy(const tensor::Tensor<double>&, std::span<const std::size_t>, std::size_t);

}  // namespace cv4code::evalret
