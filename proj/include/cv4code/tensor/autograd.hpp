#pragma once

#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include "cv4code/tensor/tensor.hpp"

namespace cv4code::tensor {

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::string_view op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  /// Propagates `grad` of this node into the grads of `inputs`.
  std::function<void(Node&)> backward;

  Tensor<T>& grad_buffer() {
    if (grad.empty()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

/// Handle to a value in the computation graph. Copies share the node.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<T> value, bool requires_grad = false);
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  const Tensor<T>& value() const { return node_->value; }
  /// In-place access for optimizers and initializers; never use on
  /// non-leaf values that a pending backward pass depends on.
  Tensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t dim(std::size_t axis) const { return node_->value.dim(axis); }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  const Tensor<T>& grad() const { return node_->grad; }
  void zero_grad() { node_->grad = Tensor<T>(); }

  /// Value of a single-element tensor.
  T item() const;

  const std::shared_ptr<Node<T>>& node() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Creates an op result. If recording is on and any input requires grad,
/// the node keeps its inputs and backward closure; otherwise it is a
/// constant and both are dropped.
template <typename T>
Var<T> record(Tensor<T> value, std::string_view op, std::vector<Var<T>> inputs,
              std::function<void(Node<T>&)> backward);

/// Nodes reachable from a root, inputs before consumers.
template <typename T>
struct Graph {
  std::vector<Node<T>*> order;
};

template <typename T>
Graph<T> topological_order(const Var<T>& root);

/// Reverse sweep from a scalar loss. Gradients accumulate into every
/// requires_grad node; call zero_grad on parameters between steps.
/// Throws NotScalarLoss.
template <typename T>
void backward(const Var<T>& loss);

extern template class Var<float>;
extern template class Var<double>;

}  // namespace cv4code::tensor
