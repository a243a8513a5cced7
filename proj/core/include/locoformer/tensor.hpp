// Copyright (c) 2026 The locoformer authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensor with reverse-mode differentiation. Values are float
// for training; every op is also instantiated for double so gradients can be
// verified against 64-bit finite differences.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "locoformer/common.hpp"

namespace locoformer {

template <class T>
struct Node;

template <class T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false) {
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::make_shared<std::vector<T>>(checked_numel(t.shape_), T(0));
    t.set_requires_grad(requires_grad);
    return t;
  }

  static Tensor from(std::vector<int> shape, std::vector<T> values, bool requires_grad = false) {
    Tensor t;
    t.shape_ = std::move(shape);
    if (checked_numel(t.shape_) != values.size()) {
      throw ShapeError("tensor: value count " + std::to_string(values.size()) +
                       " does not match shape " + shape_string(t.shape_));
    }
    t.data_ = std::make_shared<std::vector<T>>(std::move(values));
    t.set_requires_grad(requires_grad);
    return t;
  }

  static Tensor scalar(T v, bool requires_grad = false) { return from({1}, {v}, requires_grad); }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  std::size_t size() const { return data_ ? data_->size() : 0; }
  bool defined() const { return static_cast<bool>(data_); }

  T* data() { return data_->data(); }
  const T* data() const { return data_->data(); }
  T& operator[](std::size_t i) { return (*data_)[i]; }
  const T& operator[](std::size_t i) const { return (*data_)[i]; }
  T item() const {
    if (size() != 1) throw UsageError("item() on tensor with " + std::to_string(size()) + " elements");
    return (*data_)[0];
  }

  bool requires_grad() const { return requires_grad_; }

  // Gradients share storage across copies, so the buffer is allocated as soon
  // as the flag is set; the invariant grad.size == value.size always holds.
  void set_requires_grad(bool flag) {
    requires_grad_ = flag;
    if (flag && !grad_) grad_ = std::make_shared<std::vector<T>>(size(), T(0));
  }

  T* grad() { return grad_ ? grad_->data() : nullptr; }
  const T* grad() const { return grad_ ? grad_->data() : nullptr; }
  std::vector<T>& grad_vec() { return *grad_; }

  void zero_grad() {
    if (grad_) std::fill(grad_->begin(), grad_->end(), T(0));
  }

  // Reinterpret the flat buffer under a new shape. Data and gradient storage
  // are shared, so this is a view: no node is created and backward sees
  // straight through it.
  Tensor reshaped(std::vector<int> new_shape) const {
    if (checked_numel(new_shape) != size()) {
      throw ShapeError("reshape: cannot view " + shape_string(shape_) + " as " +
                       shape_string(new_shape));
    }
    Tensor t = *this;
    t.shape_ = std::move(new_shape);
    return t;
  }

  Tensor detached() const {
    Tensor t;
    t.shape_ = shape_;
    t.data_ = data_;
    return t;
  }

  Tensor clone() const {
    Tensor t = zeros(shape_, requires_grad_);
    std::copy(data_->begin(), data_->end(), t.data_->begin());
    return t;
  }

  static std::size_t checked_numel(const std::vector<int>& shape) {
    if (shape.empty()) throw ShapeError("tensor: empty shape");
    std::size_t n = 1;
    for (int d : shape) {
      if (d <= 0) throw ShapeError("tensor: non-positive extent in shape " + shape_string(shape));
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  static std::string shape_string(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << "]";
    return os.str();
  }

  std::shared_ptr<Node<T>> node;

 private:
  std::vector<int> shape_;
  std::shared_ptr<std::vector<T>> data_;
  std::shared_ptr<std::vector<T>> grad_;
  bool requires_grad_ = false;
};

// One op record: the parents it read and how to push gradients back to them.
// Saved activations live in the backprop closure.
template <class T>
struct Node {
  const char* op = "";
  std::vector<Tensor<T>> parents;
  std::function<void(Tensor<T>&)> backprop;
};

namespace detail {

inline thread_local int no_grad_depth = 0;

}  // namespace detail

inline bool grad_enabled() { return detail::no_grad_depth == 0; }

// RAII scope that disables graph construction (inference, metrics, finite
// differences).
struct NoGradGuard {
  NoGradGuard() { ++detail::no_grad_depth; }
  ~NoGradGuard() { --detail::no_grad_depth; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

template <class T>
bool wants_grad(const Tensor<T>& t) {
  return grad_enabled() && t.requires_grad();
}

template <class T>
std::shared_ptr<Node<T>> make_node(const char* op, std::vector<Tensor<T>> parents) {
  auto n = std::make_shared<Node<T>>();
  n->op = op;
  n->parents = std::move(parents);
  return n;
}

// Reverse-mode sweep from a scalar loss. Each node is visited exactly once in
// reverse topological order; `seed` is the incoming dLoss (1/batch for
// gradient accumulation across batch items).
template <class T>
void backward(Tensor<T>& loss, T seed = T(1)) {
  if (loss.size() != 1) throw UsageError("backward: loss must be a scalar");
  if (!loss.requires_grad() || !loss.node) return;

  // Iterative DFS building a topological order of op nodes.
  std::vector<Tensor<T>*> order;
  std::vector<std::pair<Tensor<T>*, size_t>> stack;
  std::unordered_set<Node<T>*> visited;
  stack.push_back({&loss, 0});
  visited.insert(loss.node.get());
  while (!stack.empty()) {
    auto& [t, next_parent] = stack.back();
    Node<T>* n = t->node.get();
    if (next_parent < n->parents.size()) {
      Tensor<T>& p = n->parents[next_parent++];
      if (p.node && !visited.count(p.node.get())) {
        visited.insert(p.node.get());
        stack.push_back({&p, 0});
      }
    } else {
      order.push_back(t);
      stack.pop_back();
    }
  }

  loss.grad()[0] += seed;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Tensor<T>& t = **it;
    if (t.node->backprop) t.node->backprop(t);
  }
}

}  // namespace locoformer
