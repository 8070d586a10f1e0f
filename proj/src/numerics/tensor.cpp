// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#include "neurodict/numerics/tensor.hpp"

#include <algorithm>
#include <unordered_set>

#include "neurodict/errors.hpp"

namespace neurodict::numerics {

namespace {
thread_local bool g_grad_enabled = true;

void validate_shape(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one extent");
  for (std::size_t extent : shape) {
    if (extent == 0) throw DimensionError("tensor extents must be positive, got " + to_string(shape));
  }
}
}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::vector<double>& detail::Node::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  validate_shape(shape);
  auto node = std::make_shared<detail::Node>();
  node->value.assign(numerics::numel(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  validate_shape(shape);
  if (numerics::numel(shape) != values.size()) {
    throw DimensionError("shape " + to_string(shape) + " needs " +
                         std::to_string(numerics::numel(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return full({1}, value, requires_grad); }

std::size_t Tensor::rows() const { return numel() / cols(); }

std::size_t Tensor::cols() const { return node_->shape.back(); }

double Tensor::at(std::size_t row, std::size_t col) const { return node_->value[row * cols() + col]; }

double Tensor::item() const {
  if (numel() != 1) throw DimensionError("item() needs a single-element tensor, got " + to_string(shape()));
  return node_->value[0];
}

void Tensor::set_requires_grad(bool on) { node_->requires_grad = on; }

std::span<const double> Tensor::grad() const { return node_->ensure_grad(); }

std::span<double> Tensor::mutable_grad() { return node_->ensure_grad(); }

void Tensor::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
  node_->has_grad = false;
}

void Tensor::backward() const {
  if (numel() != 1) {
    throw DimensionError("backward() needs a scalar loss, got shape " + to_string(shape()));
  }
  // Iterative post-order DFS gives a topological order with the root last.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  // Interior gradients belong to this pass only; leaves accumulate.
  for (detail::Node* node : order) {
    if (node->backward) std::fill(node->grad.begin(), node->grad.end(), 0.0);
  }
  node_->ensure_grad()[0] += 1.0;
  node_->has_grad = true;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (!node->backward || !node->has_grad) continue;
    node->backward(*node);
  }
}

Tensor Tensor::clone() const {
  auto node = std::make_shared<detail::Node>();
  node->shape = node_->shape;
  node->value = node_->value;
  node->requires_grad = node_->requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::detach() const {
  auto node = std::make_shared<detail::Node>();
  node->shape = node_->shape;
  node->value = node_->value;
  return Tensor(std::move(node));
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

void zero_grads(std::span<Tensor> tensors) {
  for (Tensor& t : tensors) t.zero_grad();
}

}  // namespace neurodict::numerics
