#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "hgformer/error.hpp"

namespace hgformer {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits, so the stream is
/// identical across standard libraries.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

namespace detail {

inline bool& grad_mode_flag() {
  thread_local bool enabled = true;
  return enabled;
}

template <class T>
struct Node {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> value;
  std::vector<T> grad;  // empty until first accumulation
  bool requires_grad = false;

  // Recording: inputs and the closure that pushes this->grad into them.
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  std::vector<T>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), T(0));
    return grad;
  }
};

}  // namespace detail

/// RAII switch that disables recording on the current thread.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode_flag()) { detail::grad_mode_flag() = false; }
  ~NoGradGuard() { detail::grad_mode_flag() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

inline bool grad_enabled() { return detail::grad_mode_flag(); }

/// Dense row-major 2-D tensor handle. Copies share storage; use clone() for
/// a deep copy. Tensors produced by ops on inputs that require gradients
/// keep a link to those inputs until backward() runs.
template <class T>
class Tensor {
 public:
  using value_type = T;
  using NodePtr = std::shared_ptr<detail::Node<T>>;

  Tensor() = default;

  static Tensor zeros(std::size_t rows, std::size_t cols) { return filled(rows, cols, T(0)); }

  static Tensor filled(std::size_t rows, std::size_t cols, T v) {
    return from_values(rows, cols, std::vector<T>(rows * cols, v));
  }

  static Tensor from_values(std::size_t rows, std::size_t cols, std::vector<T> values) {
    if (values.size() != rows * cols)
      throw Error(ErrorKind::ShapeMismatch, std::to_string(values.size()) + " values for a " +
                                                std::to_string(rows) + "x" + std::to_string(cols) +
                                                " tensor");
    auto n = std::make_shared<detail::Node<T>>();
    n->rows = rows;
    n->cols = cols;
    n->value = std::move(values);
    return Tensor(std::move(n));
  }

  /// A trainable leaf.
  static Tensor parameter(std::size_t rows, std::size_t cols, std::vector<T> values) {
    Tensor t = from_values(rows, cols, std::move(values));
    t.node_->requires_grad = true;
    return t;
  }

  bool defined() const noexcept { return static_cast<bool>(node_); }
  std::size_t rows() const { return node_->rows; }
  std::size_t cols() const { return node_->cols; }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }

  T operator()(std::size_t r, std::size_t c) const { return node_->value[r * node_->cols + c]; }
  T item() const {
    if (size() != 1) throw Error(ErrorKind::NotAScalar, "item() on " + shape_string());
    return node_->value[0];
  }

  std::span<const T> values() const { return node_->value; }
  /// Mutable access for optimizers and finite-difference probes.
  std::span<T> mutable_values() { return node_->value; }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad_buffer(); }
  void zero_grad() { node_->grad.clear(); }
  void set_requires_grad(bool on) { node_->requires_grad = on; }

  Tensor clone() const {
    Tensor t = from_values(rows(), cols(), node_->value);
    t.node_->requires_grad = node_->requires_grad;
    return t;
  }

  /// Same values, no gradient link.
  Tensor detach() const { return from_values(rows(), cols(), node_->value); }

  std::string shape_string() const {
    return std::to_string(rows()) + "x" + std::to_string(cols());
  }

  const NodePtr& node() const noexcept { return node_; }

  /// Builds an op result. Recording happens only when grad mode is on and
  /// some input requires a gradient.
  static Tensor make_result(std::size_t rows, std::size_t cols, std::vector<T> values,
                            std::vector<NodePtr> inputs,
                            std::function<void(detail::Node<T>&)> backward_fn) {
    Tensor out = from_values(rows, cols, std::move(values));
    if (!grad_enabled()) return out;
    const bool any = std::any_of(inputs.begin(), inputs.end(),
                                 [](const NodePtr& p) { return p && p->requires_grad; });
    if (any) {
      out.node_->requires_grad = true;
      out.node_->parents = std::move(inputs);
      out.node_->backward_fn = std::move(backward_fn);
    }
    return out;
  }

 private:
  explicit Tensor(NodePtr n) : node_(std::move(n)) {}

  NodePtr node_;
};

/// Reverse-mode sweep from a 1x1 loss. Gradients accumulate into every
/// reachable node that requires one; recorded links are dropped afterwards.
template <class T>
void backward(const Tensor<T>& loss) {
  using NodePtr = typename Tensor<T>::NodePtr;
  if (!loss.defined() || loss.size() != 1)
    throw Error(ErrorKind::NotAScalar, "backward() needs a 1x1 loss, got " +
                                           (loss.defined() ? loss.shape_string() : "undefined"));
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS: parents before children in `order`.
  std::vector<detail::Node<T>*> order;
  std::unordered_set<const detail::Node<T>*> seen;
  std::vector<std::pair<detail::Node<T>*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      const NodePtr& p = node->parents[next++];
      if (p && p->requires_grad && seen.insert(p.get()).second) stack.emplace_back(p.get(), 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->grad_buffer()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node<T>& n = **it;
    if (n.backward_fn) {
      n.grad_buffer();
      n.backward_fn(n);
    } else {
      n.grad_buffer();  // leaf: make sure it is populated even if nothing flowed
    }
  }
  for (detail::Node<T>* n : order) {
    n->parents.clear();
    n->backward_fn = nullptr;
  }
}

}  // namespace hgformer
