#pragma once

#include <Eigen/Core>

#include "cv4code/common/error.hpp"
#include "cv4code/tensor/autograd.hpp"

namespace cv4code::tensor::detail {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<Matrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const Matrix<T>>;

template <typename T>
ConstMatrixMap<T> as_matrix(const Tensor<T>& t, std::size_t rows, std::size_t cols,
                            std::size_t offset = 0) {
  return ConstMatrixMap<T>(t.data() + offset, static_cast<Eigen::Index>(rows),
                           static_cast<Eigen::Index>(cols));
}

template <typename T>
MatrixMap<T> as_matrix(Tensor<T>& t, std::size_t rows, std::size_t cols, std::size_t offset = 0) {
  return MatrixMap<T>(t.data() + offset, static_cast<Eigen::Index>(rows),
                      static_cast<Eigen::Index>(cols));
}

/// Grad buffer of input i if it participates in backward, else nullptr.
template <typename T>
Tensor<T>* input_grad(Node<T>& self, std::size_t i) {
  auto& in = self.inputs[i];
  return in->requires_grad ? &in->grad_buffer() : nullptr;
}

template <typename T>
const Tensor<T>& input_value(const Node<T>& self, std::size_t i) {
  return self.inputs[i]->value;
}

[[noreturn]] inline void shape_error(const std::string& op, const std::string& what) {
  throw Error("ShapeMismatch", op + ": " + what);
}

}  // namespace cv4code::tensor::detail
