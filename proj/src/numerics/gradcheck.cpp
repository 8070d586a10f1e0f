// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#include "neurodict/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "neurodict/errors.hpp"
#include "neurodict/numerics/ops.hpp"

namespace neurodict::numerics {
namespace {

std::vector<double> projection_weights(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<double> w(n);
  for (double& x : w) x = 2.0 * uniform01(rng) - 1.0;
  return w;
}

Tensor reduce_to_scalar(const Tensor& out, std::uint64_t seed) {
  if (out.numel() == 1) return out;
  const Tensor w = Tensor::from(out.shape(), projection_weights(out.numel(), seed));
  return sum(mul(out, w));
}

}  // namespace

GradCheckResult grad_check(const std::function<Tensor()>& loss_fn, std::span<Tensor> wrt,
                           const GradCheckOptions& options) {
  if (options.eps < 1e-6 || options.eps > 1e-3) throw UsageError("grad_check: eps must lie in [1e-6, 1e-3]");

  for (Tensor& t : wrt) t.zero_grad();
  const Tensor loss = reduce_to_scalar(loss_fn(), options.seed);
  loss.backward();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(wrt.size());
  for (const Tensor& t : wrt) analytic.emplace_back(t.grad().begin(), t.grad().end());
  for (Tensor& t : wrt) t.zero_grad();

  auto eval = [&]() {
    NoGradGuard no_grad;
    return reduce_to_scalar(loss_fn(), options.seed).item();
  };

  GradCheckResult result;
  std::mt19937_64 rng(options.seed + 17);
  for (std::size_t i = 0; i < wrt.size(); ++i) {
    auto values = wrt[i].data();
    std::vector<std::size_t> indices(values.size());
    std::iota(indices.begin(), indices.end(), 0);
    if (options.max_elements_per_input != 0 && indices.size() > options.max_elements_per_input) {
      for (std::size_t j = 0; j < options.max_elements_per_input; ++j) {
        const std::size_t pick = j + static_cast<std::size_t>(rng() % (indices.size() - j));
        std::swap(indices[j], indices[pick]);
      }
      indices.resize(options.max_elements_per_input);
    }
    for (std::size_t idx : indices) {
      const double original = values[idx];
      values[idx] = original + options.eps;
      const double up = eval();
      values[idx] = original - options.eps;
      const double down = eval();
      values[idx] = original;
      const double numeric = (up - down) / (2.0 * options.eps);
      const double a = analytic[i][idx];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      const double err = std::abs(a - numeric) / denom;
      ++result.checked;
      if (err > result.max_rel_error || !std::isfinite(err)) {
        result.max_rel_error = std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
        result.worst_input = i;
        result.worst_element = idx;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

GradCheckResult grad_check(const OpUnderTest& op, std::span<const Shape> input_shapes, double eps,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Tensor> inputs;
  inputs.reserve(input_shapes.size());
  for (const Shape& shape : input_shapes) {
    std::vector<double> values(numel(shape));
    for (double& x : values) x = 2.0 * uniform01(rng) - 1.0;
    inputs.push_back(Tensor::from(shape, std::move(values), true));
  }
  GradCheckOptions options;
  options.eps = eps;
  options.seed = seed;
  return grad_check([&]() { return op(inputs); }, inputs, options);
}

}  // namespace neurodict::numerics
