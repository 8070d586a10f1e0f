// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#include "neurodict/numerics/optim.hpp"

#include <cmath>
#include <limits>

#include "neurodict/errors.hpp"

namespace neurodict::numerics {

void adam_step(std::span<Tensor> params, AdamState& state) {
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i].numel(), 0.0);
      state.v[i].assign(params[i].numel(), 0.0);
    }
  }
  if (state.m.size() != params.size()) {
    throw DimensionError("adam_step: optimizer state tracks " + std::to_string(state.m.size()) +
                         " parameters, got " + std::to_string(params.size()));
  }
  if (state.step == std::numeric_limits<std::uint64_t>::max()) throw NumericalError("adam_step: step overflow");
  ++state.step;

  const AdamConfig& c = state.config;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    if (state.m[i].size() != p.numel()) {
      throw DimensionError("adam_step: moment buffer size mismatch for parameter " + std::to_string(i));
    }
    if (!p.has_grad()) continue;
    auto value = p.data();
    const auto g = p.grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      value[j] -= c.lr * c.weight_decay * value[j];
      value[j] -= c.lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace neurodict::numerics
