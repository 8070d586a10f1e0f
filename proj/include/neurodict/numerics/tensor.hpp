// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace neurodict::numerics {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

namespace detail {

// One vertex of the recorded computation. Leaves have no parents and no
// backward function.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first use
  bool requires_grad = false;
  bool has_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::vector<double>& ensure_grad();
};

}  // namespace detail

/// Dense row-major float64 array with reverse-mode differentiation.
///
/// Tensor is a handle: copies share the same storage and gradient, which is
/// how tied parameters are expressed. Use clone() for an independent copy.
///
/// Most operations treat a tensor as a matrix: cols() is the last extent and
/// rows() is the product of all leading extents.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  explicit operator bool() const noexcept { return node_ != nullptr; }

  const Shape& shape() const { return node_->shape; }
  std::size_t numel() const { return node_->value.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return node_->value; }
  std::span<double> data() { return node_->value; }
  double operator[](std::size_t i) const { return node_->value[i]; }
  double at(std::size_t row, std::size_t col) const;
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on);

  /// True once backward() has deposited a gradient here since the last
  /// zero_grad(). Parameters outside the recorded graph stay false.
  bool has_grad() const { return node_->has_grad; }

  /// Zeros when no gradient has been deposited.
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  /// Accumulates d(this)/d(leaf) into every reachable leaf that requires
  /// grad. Requires numel() == 1.
  void backward() const;

  /// Deep copy, detached from any graph.
  Tensor clone() const;

  /// Value copy with no graph history and requires_grad off.
  Tensor detach() const;

  bool same_storage(const Tensor& other) const { return node_ == other.node_; }

  // Used by op implementations.
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Disables graph recording on this thread for the guard's lifetime.
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

void zero_grads(std::span<Tensor> tensors);

}  // namespace neurodict::numerics
