#pragma once

// Minimal reverse-mode automatic differentiation over rank-4 tensors.
//
// Every op returns a Var whose node remembers its inputs and a closure that
// pushes the node's gradient back into them. backward() walks the graph in
// reverse topological order. Graph recording is skipped entirely while a
// NoGradGuard is alive or when no input requires a gradient.

#include <functional>
#include <initializer_list>
#include <memory>
#include <type_traits>
#include <unordered_set>
#include <utility>
#include <vector>

#include "coseg/core/tensor.hpp"

namespace coseg {

template <class T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(const Node&)> backward;

  /// Gradient buffer, zero-initialised on first use.
  Tensor<T>& grad_buffer() {
    if (grad.shape() != value.shape() || grad.empty()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

inline bool& grad_mode_flag() {
  thread_local bool enabled = true;
  return enabled;
}

[[nodiscard]] inline bool grad_enabled() { return grad_mode_flag(); }

/// Disables graph recording for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(grad_mode_flag()) { grad_mode_flag() = false; }
  ~NoGradGuard() { grad_mode_flag() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <class T>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<T> value, bool requires_grad = false) : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  [[nodiscard]] bool defined() const { return node_ != nullptr; }
  [[nodiscard]] const Tensor<T>& value() const { return node_->value; }
  [[nodiscard]] Tensor<T>& mutable_value() { return node_->value; }
  [[nodiscard]] const Shape& shape() const { return node_->value.shape(); }
  [[nodiscard]] bool requires_grad() const { return node_ && node_->requires_grad; }
  [[nodiscard]] const std::shared_ptr<Node<T>>& node() const { return node_; }

  /// Gradient accumulated by the last backward pass (zeros if none reached this node).
  [[nodiscard]] const Tensor<T>& grad() const { return node_->grad_buffer(); }
  [[nodiscard]] Tensor<T>& mutable_grad() { return node_->grad_buffer(); }
  void zero_grad() {
    if (!node_->grad.empty()) node_->grad.fill(T(0));
  }

  /// Value of a single-element tensor.
  [[nodiscard]] T item() const {
    if (node_->value.size() != 1) throw ShapeError("item() on non-scalar " + shape().str());
    return node_->value[0];
  }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Creates the output node of an op. `backward` is recorded only when needed.
template <class T>
Var<T> make_result(Tensor<T> value, std::initializer_list<const Var<T>*> inputs,
                   std::type_identity_t<std::function<void(const Node<T>&)>> backward) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  if (grad_enabled()) {
    bool any = false;
    for (const Var<T>* in : inputs) any = any || in->requires_grad();
    if (any) {
      node->requires_grad = true;
      for (const Var<T>* in : inputs) node->parents.push_back(in->node());
      node->backward = std::move(backward);
    }
  }
  return Var<T>(std::move(node));
}

template <class T>
Var<T> make_result(Tensor<T> value, const std::vector<Var<T>>& inputs,
                   std::type_identity_t<std::function<void(const Node<T>&)>> backward) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  if (grad_enabled()) {
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (any) {
      node->requires_grad = true;
      for (const auto& in : inputs) node->parents.push_back(in.node());
      node->backward = std::move(backward);
    }
  }
  return Var<T>(std::move(node));
}

/// Backpropagates from a scalar root, seeding d(root)/d(root) = 1.
template <class T>
void backward(const Var<T>& root) {
  if (root.value().size() != 1) throw ShapeError("backward() requires a scalar root, got " + root.shape().str());
  if (!root.requires_grad()) return;

  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{root.node().get(), 0}};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->grad_buffer()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

/// Accumulation target for input `i` of `self`, or null when it needs no gradient.
template <class T>
T* parent_grad(const Node<T>& self, std::size_t i) {
  Node<T>& p = *self.parents[i];
  return p.requires_grad ? p.grad_buffer().data() : nullptr;
}

}  // namespace coseg
