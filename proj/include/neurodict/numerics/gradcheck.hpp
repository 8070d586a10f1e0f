// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "neurodict/numerics/tensor.hpp"

namespace neurodict::numerics {

struct GradCheckOptions {
  double eps = 1e-5;
  std::uint64_t seed = 0;
  /// 0 checks every element; otherwise a seeded sample of this many per input.
  std::size_t max_elements_per_input = 0;
  /// Denominator floor of the relative error, so exact zeros compare sanely.
  double floor = 1e-6;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_element = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

/// Compares analytic gradients of loss_fn() with respect to `wrt` against
/// central differences, perturbing the tensors in place. loss_fn must be
/// deterministic. A non-scalar result is reduced by a fixed seeded random
/// projection so every output element contributes.
///
/// error(i) = |analytic - numeric| / max(|analytic|, |numeric|, floor)
GradCheckResult grad_check(const std::function<Tensor()>& loss_fn, std::span<Tensor> wrt,
                           const GradCheckOptions& options = {});

using OpUnderTest = std::function<Tensor(std::span<const Tensor>)>;

/// Seeded uniform(-1, 1) inputs of the given shapes, then as above.
GradCheckResult grad_check(const OpUnderTest& op, std::span<const Shape> input_shapes, double eps,
                           std::uint64_t seed);

}  // namespace neurodict::numerics
