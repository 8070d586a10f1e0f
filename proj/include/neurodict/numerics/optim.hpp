// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "neurodict/numerics/tensor.hpp"

namespace neurodict::numerics {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 1e-6;
  double epsilon = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

/// Moment buffers are sized lazily on the first step and stay congruent with
/// the parameter list passed to adam_step.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  bool operator==(const AdamState&) const = default;
};

/// One bias-corrected Adam update with decoupled weight decay:
///   p <- p - lr * wd * p - lr * m_hat / (sqrt(v_hat) + eps)
/// Parameters that received no gradient since their last zero_grad() are
/// skipped entirely. Gradients are left in place.
void adam_step(std::span<Tensor> params, AdamState& state);

}  // namespace neurodict::numerics
