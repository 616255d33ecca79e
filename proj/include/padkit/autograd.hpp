#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "padkit/tensor.hpp"

namespace padkit {

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  /// Gradient accumulator, zero-initialized on first use.
  Tensor<T>& grad_buffer() {
    if (grad.empty() && !value.empty()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

/// Handle to a value participating in differentiation.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Var leaf(Tensor<T> value, bool requires_grad = false) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return Var(std::move(n));
  }

  bool valid() const noexcept { return static_cast<bool>(node_); }
  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  const Tensor<T>& grad() const { return node_->grad; }
  Tensor<T>& grad() { return node_->grad; }
  void zero_grad() { node_->grad = Tensor<T>(); }

  Node<T>* node() const noexcept { return node_.get(); }
  const std::shared_ptr<Node<T>>& ptr() const noexcept { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Records differentiable operations in execution order.
///
/// Nodes are appended as they are produced, so the record is already in
/// topological order; backward() walks it in reverse. A disabled tape
/// records nothing, which is how evaluation runs skip gradient bookkeeping.
template <typename T>
class Tape {
 public:
  explicit Tape(bool enabled = true) : enabled_(enabled) {}

  bool enabled() const noexcept { return enabled_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  Var<T> record(Tensor<T> value, std::vector<Var<T>> parents, std::function<void(Node<T>&)> backward) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    bool any = false;
    for (const auto& p : parents) any = any || p.requires_grad();
    if (enabled_ && any) {
      n->requires_grad = true;
      n->backward_fn = std::move(backward);
      n->parents.reserve(parents.size());
      for (auto& p : parents) n->parents.push_back(p.ptr());
      nodes_.push_back(n);
    }
    return Var<T>(std::move(n));
  }

  /// Backpropagates from a scalar root (seed 1).
  void backward(const Var<T>& root) {
    if (root.value().size() != 1) throw ShapeError("backward() without seed needs a scalar root");
    backward(root, Tensor<T>(root.shape(), T{1}));
  }

  void backward(const Var<T>& root, const Tensor<T>& seed) {
    if (seed.shape() != root.shape()) throw ShapeError("backward seed shape mismatch");
    if (!root.requires_grad()) return;
    Tensor<T>& g = root.node()->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += seed[i];
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node<T>& n = **it;
      if (!n.grad.empty() && n.backward_fn) n.backward_fn(n);
    }
  }

 private:
  bool enabled_;
  std::vector<std::shared_ptr<Node<T>>> nodes_;
};

}  // namespace padkit
