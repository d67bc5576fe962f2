#include "cv4code/tensor/autograd.hpp"

#include <cmath>
#include <unordered_set>

#include "cv4code/common/error.hpp"

namespace cv4code::tensor {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
Var<T>::Var(Tensor<T> value, bool requires_grad) : node_(std::make_shared<Node<T>>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

template <typename T>
T Var<T>::item() const {
  if (node_->value.size() != 1) {
    throw Error("ShapeMismatch", "item() on tensor of shape " + shape_string(shape()));
  }
  return node_->value[0];
}

template <typename T>
Var<T> record(Tensor<T> value, std::string_view op, std::vector<Var<T>> inputs,
              std::function<void(Node<T>&)> backward) {
#ifndef NDEBUG
  for (T v : value.values()) {
    if (!std::isfinite(v)) throw Error("NumericError", std::string(op) + " produced a non-finite value");
  }
#endif
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->op = op;
  bool needs_grad = false;
  if (grad_enabled()) {
    for (const auto& in : inputs) needs_grad = needs_grad || in.requires_grad();
  }
  if (needs_grad) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.node());
    node->backward = std::move(backward);
  }
  return Var<T>(std::move(node));
}

template <typename T>
Graph<T> topological_order(const Var<T>& root) {
  Graph<T> graph;
  std::unordered_set<const Node<T>*> visited;
  // Iterative post-order DFS; (node, next input to visit).
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      graph.order.push_back(node);
      stack.pop_back();
    }
  }
  return graph;
}

template <typename T>
void backward(const Var<T>& loss) {
  if (loss.value().size() != 1) {
    throw Error("NotScalarLoss", "backward needs a scalar loss, got " + shape_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;
  const Graph<T> graph = topological_order(loss);
  loss.node()->grad_buffer()[0] += T{1};
  for (auto it = graph.order.rbegin(); it != graph.order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

template class Var<float>;
template class Var<double>;
template Var<float> record(Tensor<float>, std::string_view, std::vector<Var<float>>,
                           std::function<void(Node<float>&)>);
template Var<double> record(Tensor<double>, std::string_view, std::vector<Var<double>>,
                            std::function<void(Node<double>&)>);
template Graph<float> topological_order(const Var<float>&);
template Graph<double> topological_order(const Var<double>&);
template void backward(const Var<float>&);
template void backward(const Var<double>&);

}  // namespace cv4code::tensor
