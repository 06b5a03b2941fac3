#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "grw/error.hpp"

namespace grw::ad {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace detail {
inline thread_local bool grad_enabled = true;
}

inline bool grad_mode() noexcept { return detail::grad_enabled; }

// Disables graph recording for the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard() noexcept : previous_(detail::grad_enabled) { detail::grad_enabled = false; }
  ~NoGradGuard() { detail::grad_enabled = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <class Real>
struct Node {
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;  // empty until something accumulates into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  Real* grad_data() {
    if (grad.empty()) grad.assign(value.size(), Real(0));
    return grad.data();
  }
  bool is_leaf() const { return !backward_fn; }
};

// Dense row-major array participating in reverse-mode differentiation.
// Copies share storage; use clone() for an independent value copy.
template <class Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor() = default;

  Tensor(Shape shape, std::vector<Real> values, bool requires_grad = false)
      : node_(std::make_shared<Node<Real>>()) {
    if (numel(shape) != values.size())
      throw ShapeError("tensor of shape " + to_string(shape) + " given " +
                       std::to_string(values.size()) + " values");
    node_->shape = std::move(shape);
    node_->value = std::move(values);
    node_->requires_grad = requires_grad;
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    std::vector<Real> v(numel(shape), Real(0));
    return Tensor(std::move(shape), std::move(v), requires_grad);
  }

  static Tensor scalar(Real v) { return Tensor({1}, {v}); }

  explicit Tensor(std::shared_ptr<Node<Real>> node) : node_(std::move(node)) {}

  bool defined() const noexcept { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rows() const { return node_->shape.at(0); }
  std::size_t cols() const { return rank() < 2 ? 1 : node_->shape[1]; }

  std::span<const Real> values() const { return node_->value; }
  std::span<Real> mutable_values() { return node_->value; }
  Real operator[](std::size_t i) const { return node_->value[i]; }
  Real item() const {
    if (size() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
    return node_->value[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const Real> grad() const { return node_->grad; }
  std::span<Real> mutable_grad() { return {node_->grad_data(), size()}; }
  void zero_grad() { node_->grad.clear(); }

  Tensor clone(bool requires_grad = false) const {
    return Tensor(node_->shape, node_->value, requires_grad);
  }

  Node<Real>* node() const { return node_.get(); }
  const std::shared_ptr<Node<Real>>& node_ptr() const { return node_; }
  bool same_storage(const Tensor& other) const { return node_ == other.node_; }

 private:
  std::shared_ptr<Node<Real>> node_;
};

// Builds an op result; records parents and the backward closure only when
// grad mode is on and some parent requires a gradient.
template <class Real, class Backward>
Tensor<Real> make_result(Shape shape, std::vector<Real> value,
                         std::initializer_list<const Tensor<Real>*> parents, Backward&& fn) {
  Tensor<Real> out(std::move(shape), std::move(value));
  if (!grad_mode()) return out;
  bool any = false;
  for (const auto* p : parents) any = any || p->requires_grad();
  if (!any) return out;
  Node<Real>* n = out.node();
  n->requires_grad = true;
  for (const auto* p : parents) n->parents.push_back(p->node_ptr());
  n->backward_fn = std::forward<Backward>(fn);
  return out;
}

template <class Real, class Backward>
Tensor<Real> make_result_n(Shape shape, std::vector<Real> value,
                           const std::vector<Tensor<Real>>& parents, Backward&& fn) {
  Tensor<Real> out(std::move(shape), std::move(value));
  if (!grad_mode()) return out;
  bool any = false;
  for (const auto& p : parents) any = any || p.requires_grad();
  if (!any) return out;
  Node<Real>* n = out.node();
  n->requires_grad = true;
  for (const auto& p : parents) n->parents.push_back(p.node_ptr());
  n->backward_fn = std::forward<Backward>(fn);
  return out;
}

// Nodes reachable from a root, in topological order (parents before children).
template <class Real>
class Tape {
 public:
  static Tape record(const Tensor<Real>& root) {
    Tape tape;
    std::unordered_set<const Node<Real>*> seen;
    // Iterative post-order DFS; graphs from deep stacks overflow recursion.
    std::vector<std::pair<std::shared_ptr<Node<Real>>, std::size_t>> stack;
    if (!root.node_ptr()->requires_grad) return tape;
    stack.emplace_back(root.node_ptr(), 0);
    seen.insert(root.node());
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->parents.size()) {
        auto parent = node->parents[next++];
        if (parent->requires_grad && seen.insert(parent.get()).second)
          stack.emplace_back(std::move(parent), 0);
      } else {
        tape.order_.push_back(node);
        stack.pop_back();
      }
    }
    return tape;
  }

  std::size_t size() const { return order_.size(); }

  // Runs every backward closure once in reverse topological order, then
  // releases the graph. Leaf gradients are kept; interior gradients dropped.
  void run_backward() {
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
      Node<Real>& n = **it;
      if (n.backward_fn && !n.grad.empty()) n.backward_fn(n);
    }
    for (auto& n : order_) {
      if (!n->is_leaf()) {
        n->grad.clear();
        n->grad.shrink_to_fit();
        n->backward_fn = nullptr;
        n->parents.clear();
      }
    }
    order_.clear();
  }

 private:
  std::vector<std::shared_ptr<Node<Real>>> order_;
};

template <class Real>
void backward(const Tensor<Real>& loss) {
  if (loss.size() != 1)
    throw ShapeError("backward needs a scalar loss, got shape " + to_string(loss.shape()));
  auto tape = Tape<Real>::record(loss);
  if (tape.size() == 0) return;
  loss.node()->grad_data()[0] += Real(1);
  tape.run_backward();
}

}  // namespace grw::ad
