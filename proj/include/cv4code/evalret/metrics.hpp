#pragma once

#include <cstddef>
#include <span>

#include "cv4code/tensor/tensor.hpp"

namespace cv4code::evalret {

/// Fraction of rows of B x C `logits` whose label ranks within the k
/// largest. Equal logits rank the lower class index first. Throws
/// LabelOutOfRange, ShapeMismatch (also for k = 0 or k > C).
template <typename T>
double topk_accuracy(const tensor::Tensor<T>& logits, std::span<const std::size_t> labels, std::size_t k);

/// dot(a, b) / (|a| |b|). Throws ZeroVector, ShapeMismatch.
double cosine(std::span<const double> a, std::span<const double> b);
double cosine(std::span<const float> a, std::span<const float> b);

}  // namespace cv4code::evalret
