// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#include "neurodict/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <string>

#include "neurodict/errors.hpp"
#include "neurodict/kernels/kernels.hpp"

namespace neurodict::numerics {
namespace {

using detail::Node;
using Backward = std::function<void(Node&)>;

bool needs_graph(std::initializer_list<const Tensor*> inputs) {
  if (!grad_enabled()) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

Tensor make_result(Shape shape, std::vector<double> value, std::initializer_list<const Tensor*> inputs,
                   Backward backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  if (needs_graph(inputs)) {
    node->requires_grad = true;
    for (const Tensor* t : inputs) node->parents.push_back(t->node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

// Gradient buffer of a parent, or nullptr when it does not want one.
double* grad_of(Node& self, std::size_t parent) {
  Node& p = *self.parents[parent];
  if (!p.requires_grad) return nullptr;
  p.has_grad = true;
  return p.ensure_grad().data();
}

const double* parent_value(Node& self, std::size_t parent) { return self.parents[parent]->value.data(); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
}

Shape with_last(const Shape& shape, std::size_t last) {
  Shape out = shape;
  out.back() = last;
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (b.shape().size() != 2 || a.cols() != b.shape()[0]) {
    throw DimensionError("matmul: inner dimensions disagree for " + to_string(a.shape()) + " x " +
                         to_string(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  kernels::gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
  return make_result(with_last(a.shape(), n), std::move(out), {&a, &b}, [m, k, n](Node& self) {
    const double* dc = self.grad.data();
    if (double* da = grad_of(self, 0)) kernels::gemm_nt(dc, parent_value(self, 1), da, m, n, k);
    if (double* db = grad_of(self, 1)) kernels::gemm_tn(parent_value(self, 0), dc, db, m, k, n);
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (b.shape().size() != 2 || a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: inner dimensions disagree for " + to_string(a.shape()) + " x " +
                         to_string(b.shape()) + "^T");
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  std::vector<double> out(m * n, 0.0);
  kernels::gemm_nt(a.data().data(), b.data().data(), out.data(), m, k, n);
  return make_result(with_last(a.shape(), n), std::move(out), {&a, &b}, [m, k, n](Node& self) {
    const double* dc = self.grad.data();
    if (double* da = grad_of(self, 0)) kernels::gemm_nn(dc, parent_value(self, 1), da, m, n, k);
    if (double* db = grad_of(self, 1)) kernels::gemm_tn(dc, parent_value(self, 0), db, m, n, k);
  });
}

Tensor transpose(const Tensor& a) {
  if (a.shape().size() != 2) throw DimensionError("transpose: expects a matrix, got " + to_string(a.shape()));
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  const auto src = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = src[i * n + j];
  return make_result({n, m}, std::move(out), {&a}, [m, n](Node& self) {
    if (double* da = grad_of(self, 0)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) da[i * n + j] += self.grad[j * m + i];
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.data().begin(), a.data().end());
  const auto bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return make_result(a.shape(), std::move(out), {&a, &b}, [](Node& self) {
    const std::size_t n = self.grad.size();
    for (std::size_t p = 0; p < 2; ++p) {
      if (double* d = grad_of(self, p)) kernels::axpy(1.0, self.grad.data(), d, n);
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.data().begin(), a.data().end());
  const auto bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return make_result(a.shape(), std::move(out), {&a, &b}, [](Node& self) {
    const std::size_t n = self.grad.size();
    if (double* da = grad_of(self, 0)) kernels::axpy(1.0, self.grad.data(), da, n);
    if (double* db = grad_of(self, 1)) kernels::axpy(-1.0, self.grad.data(), db, n);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  const auto av = a.data(), bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_result(a.shape(), std::move(out), {&a, &b}, [](Node& self) {
    const double* av = parent_value(self, 0);
    const double* bv = parent_value(self, 1);
    const std::size_t n = self.grad.size();
    if (double* da = grad_of(self, 0))
      for (std::size_t i = 0; i < n; ++i) da[i] += self.grad[i] * bv[i];
    if (double* db = grad_of(self, 1))
      for (std::size_t i = 0; i < n; ++i) db[i] += self.grad[i] * av[i];
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& x : out) x *= factor;
  return make_result(a.shape(), std::move(out), {&a}, [factor](Node& self) {
    if (double* da = grad_of(self, 0)) kernels::axpy(factor, self.grad.data(), da, self.grad.size());
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  const std::size_t n = a.cols();
  if (row.numel() != n) {
    throw DimensionError("add_row: row " + to_string(row.shape()) + " does not match columns of " +
                         to_string(a.shape()));
  }
  const std::size_t m = a.rows();
  std::vector<double> out(a.data().begin(), a.data().end());
  for (std::size_t i = 0; i < m; ++i) kernels::axpy(1.0, row.data().data(), out.data() + i * n, n);
  return make_result(a.shape(), std::move(out), {&a, &row}, [m, n](Node& self) {
    if (double* da = grad_of(self, 0)) kernels::axpy(1.0, self.grad.data(), da, m * n);
    if (double* dr = grad_of(self, 1))
      for (std::size_t i = 0; i < m; ++i) kernels::axpy(1.0, self.grad.data() + i * n, dr, n);
  });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& x : out) x = x > 0.0 ? x : 0.0;
  return make_result(a.shape(), std::move(out), {&a}, [](Node& self) {
    if (double* da = grad_of(self, 0)) {
      const double* x = parent_value(self, 0);
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        if (x[i] > 0.0) da[i] += self.grad[i];
    }
  });
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Tensor dropout(const Tensor& a, double rate, bool training, std::mt19937_64& rng) {
  if (!training || rate <= 0.0) return a;
  if (rate >= 1.0) throw UsageError("dropout rate must be below 1");
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(a.numel());
  for (double& m : mask) m = uniform01(rng) < rate ? 0.0 : keep_scale;
  std::vector<double> out(a.data().begin(), a.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return make_result(a.shape(), std::move(out), {&a}, [mask = std::move(mask)](Node& self) {
    if (double* da = grad_of(self, 0))
      for (std::size_t i = 0; i < mask.size(); ++i) da[i] += self.grad[i] * mask[i];
  });
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (double x : a.data()) acc += x;
  return make_result({1}, {acc}, {&a}, [](Node& self) {
    if (double* da = grad_of(self, 0)) {
      const std::size_t n = self.parents[0]->value.size();
      for (std::size_t i = 0; i < n; ++i) da[i] += self.grad[0];
    }
  });
}

Tensor mean(const Tensor& a) {
  const double inv = 1.0 / static_cast<double>(a.numel());
  double acc = 0.0;
  for (double x : a.data()) acc += x;
  return make_result({1}, {acc * inv}, {&a}, [inv](Node& self) {
    if (double* da = grad_of(self, 0)) {
      const std::size_t n = self.parents[0]->value.size();
      for (std::size_t i = 0; i < n; ++i) da[i] += self.grad[0] * inv;
    }
  });
}

Tensor softmax(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(a.data().begin(), a.data().end());
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = std::exp(row[j] - mx);
      z += row[j];
    }
    for (std::size_t j = 0; j < n; ++j) row[j] /= z;
  }
  return make_result(a.shape(), std::move(out), {&a}, [m, n](Node& self) {
    if (double* da = grad_of(self, 0)) {
      for (std::size_t i = 0; i < m; ++i) {
        const double* y = self.value.data() + i * n;
        const double* dy = self.grad.data() + i * n;
        const double s = kernels::dot(y, dy, n);
        for (std::size_t j = 0; j < n; ++j) da[i * n + j] += y[j] * (dy[j] - s);
      }
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const std::size_t m = x.rows(), n = x.cols();
  if (gamma.numel() != n || beta.numel() != n) {
    throw DimensionError("layer_norm: gamma/beta must have " + std::to_string(n) + " entries");
  }
  if (!(eps > 0.0)) throw UsageError("layer_norm: eps must be positive");
  std::vector<double> xhat(m * n);
  std::vector<double> inv_std(m);
  std::vector<double> out(m * n);
  const auto xv = x.data(), g = gamma.data(), b = beta.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.data() + i * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (row[j] - mu) * inv_std[i];
      out[i * n + j] = g[j] * xhat[i * n + j] + b[j];
    }
  }
  return make_result(
      x.shape(), std::move(out), {&x, &gamma, &beta},
      [m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
        const double* g = parent_value(self, 1);
        double* dx = grad_of(self, 0);
        double* dg = grad_of(self, 1);
        double* db = grad_of(self, 2);
        std::vector<double> dxhat(n);
        for (std::size_t i = 0; i < m; ++i) {
          const double* dy = self.grad.data() + i * n;
          const double* xh = xhat.data() + i * n;
          if (dg)
            for (std::size_t j = 0; j < n; ++j) dg[j] += dy[j] * xh[j];
          if (db)
            for (std::size_t j = 0; j < n; ++j) db[j] += dy[j];
          if (!dx) continue;
          double mean_d = 0.0, mean_dx = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            dxhat[j] = dy[j] * g[j];
            mean_d += dxhat[j];
            mean_dx += dxhat[j] * xh[j];
          }
          mean_d /= static_cast<double>(n);
          mean_dx /= static_cast<double>(n);
          for (std::size_t j = 0; j < n; ++j)
            dx[i * n + j] += inv_std[i] * (dxhat[j] - mean_d - xh[j] * mean_dx);
        }
      });
}

Tensor embedding(const Tensor& table, std::span<const TokenId> ids) {
  if (ids.empty()) throw DimensionError("embedding: empty id list");
  const std::size_t vocab = table.rows(), d = table.cols();
  std::vector<double> out(ids.size() * d);
  const auto tv = table.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw DimensionError("embedding: token id " + std::to_string(ids[i]) + " out of range for " +
                           std::to_string(vocab) + " rows");
    }
    std::copy_n(tv.data() + static_cast<std::size_t>(ids[i]) * d, d, out.data() + i * d);
  }
  std::vector<TokenId> id_copy(ids.begin(), ids.end());
  return make_result({ids.size(), d}, std::move(out), {&table}, [d, id_copy = std::move(id_copy)](Node& self) {
    if (double* dt = grad_of(self, 0)) {
      for (std::size_t i = 0; i < id_copy.size(); ++i)
        kernels::axpy(1.0, self.grad.data() + i * d, dt + static_cast<std::size_t>(id_copy[i]) * d, d);
    }
  });
}

Tensor masked_mean_rows(const Tensor& x, std::span<const std::uint8_t> mask, std::size_t batch,
                        std::size_t seq_len) {
  const std::size_t d = x.cols();
  if (x.rows() != batch * seq_len || mask.size() != batch * seq_len) {
    throw DimensionError("masked_mean_rows: expected " + std::to_string(batch * seq_len) + " rows and mask entries");
  }
  std::vector<double> weights(batch * seq_len, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t count = 0;
    for (std::size_t t = 0; t < seq_len; ++t) count += mask[b * seq_len + t] ? 1 : 0;
    if (count == 0) continue;
    const double w = 1.0 / static_cast<double>(count);
    for (std::size_t t = 0; t < seq_len; ++t)
      if (mask[b * seq_len + t]) weights[b * seq_len + t] = w;
  }
  std::vector<double> out(batch * d, 0.0);
  const auto xv = x.data();
  for (std::size_t r = 0; r < batch * seq_len; ++r) {
    if (weights[r] != 0.0) kernels::axpy(weights[r], xv.data() + r * d, out.data() + (r / seq_len) * d, d);
  }
  return make_result({batch, d}, std::move(out), {&x}, [d, seq_len, weights = std::move(weights)](Node& self) {
    if (double* dx = grad_of(self, 0)) {
      for (std::size_t r = 0; r < weights.size(); ++r)
        if (weights[r] != 0.0) kernels::axpy(weights[r], self.grad.data() + (r / seq_len) * d, dx + r * d, d);
    }
  });
}

Tensor overwrite_rows(const Tensor& base, const Tensor& rows, std::span<const std::size_t> row_indices) {
  const std::size_t d = base.cols();
  if (rows.cols() != d || rows.rows() != row_indices.size()) {
    throw DimensionError("overwrite_rows: " + to_string(rows.shape()) + " cannot fill " +
                         std::to_string(row_indices.size()) + " rows of " + to_string(base.shape()));
  }
  std::vector<std::uint8_t> replaced(base.rows(), 0);
  for (std::size_t idx : row_indices) {
    if (idx >= base.rows()) throw DimensionError("overwrite_rows: row index out of range");
    if (replaced[idx]) throw DimensionError("overwrite_rows: duplicate row index");
    replaced[idx] = 1;
  }
  std::vector<double> out(base.data().begin(), base.data().end());
  for (std::size_t i = 0; i < row_indices.size(); ++i)
    std::copy_n(rows.data().data() + i * d, d, out.data() + row_indices[i] * d);
  std::vector<std::size_t> idx_copy(row_indices.begin(), row_indices.end());
  return make_result(base.shape(), std::move(out), {&base, &rows},
                     [d, idx_copy = std::move(idx_copy), replaced = std::move(replaced)](Node& self) {
                       if (double* db = grad_of(self, 0)) {
                         for (std::size_t r = 0; r < replaced.size(); ++r)
                           if (!replaced[r]) kernels::axpy(1.0, self.grad.data() + r * d, db + r * d, d);
                       }
                       if (double* dr = grad_of(self, 1)) {
                         for (std::size_t i = 0; i < idx_copy.size(); ++i)
                           kernels::axpy(1.0, self.grad.data() + idx_copy[i] * d, dr + i * d, d);
                       }
                     });
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionLayout& layout) {
  require_same_shape(q, k, "attention");
  require_same_shape(q, v, "attention");
  const std::size_t B = layout.batch, T = layout.seq_len, H = layout.heads, d = q.cols();
  if (q.rows() != B * T) throw DimensionError("attention: rows must equal batch * seq_len");
  if (H == 0 || d % H != 0) throw DimensionError("attention: heads must divide the model dimension");
  if (!layout.key_mask.empty() && layout.key_mask.size() != B * T) {
    throw DimensionError("attention: key mask must have batch * seq_len entries");
  }
  const std::size_t dh = d / H;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  auto visible = [&layout, T](std::size_t b, std::size_t t, std::size_t s) {
    if (layout.causal && s > t) return false;
    return layout.key_mask.empty() || layout.key_mask[b * T + s] != 0;
  };

  // probs[(b*H + h)*T*T + t*T + s]; zero where the key is hidden.
  std::vector<double> probs(B * H * T * T, 0.0);
  std::vector<double> out(B * T * d, 0.0);
  const double* qv = q.data().data();
  const double* kv = k.data().data();
  const double* vv = v.data().data();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t h = 0; h < H; ++h) {
      double* P = probs.data() + (b * H + h) * T * T;
      for (std::size_t t = 0; t < T; ++t) {
        const double* qrow = qv + (b * T + t) * d + h * dh;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < T; ++s) {
          if (!visible(b, t, s)) continue;
          P[t * T + s] = kernels::dot(qrow, kv + (b * T + s) * d + h * dh, dh) * inv_scale;
          mx = std::max(mx, P[t * T + s]);
        }
        if (mx == -std::numeric_limits<double>::infinity()) continue;
        double z = 0.0;
        for (std::size_t s = 0; s < T; ++s) {
          if (!visible(b, t, s)) continue;
          P[t * T + s] = std::exp(P[t * T + s] - mx);
          z += P[t * T + s];
        }
        double* orow = out.data() + (b * T + t) * d + h * dh;
        for (std::size_t s = 0; s < T; ++s) {
          if (!visible(b, t, s)) continue;
          P[t * T + s] /= z;
          kernels::axpy(P[t * T + s], vv + (b * T + s) * d + h * dh, orow, dh);
        }
      }
    }
  }
  return make_result(q.shape(), std::move(out), {&q, &k, &v},
                     [B, T, H, d, dh, inv_scale, probs = std::move(probs)](Node& self) {
                       const double* qv = parent_value(self, 0);
                       const double* kv = parent_value(self, 1);
                       const double* vv = parent_value(self, 2);
                       double* dq = grad_of(self, 0);
                       double* dk = grad_of(self, 1);
                       double* dv = grad_of(self, 2);
                       std::vector<double> dscore(T);
                       for (std::size_t b = 0; b < B; ++b) {
                         for (std::size_t h = 0; h < H; ++h) {
                           const double* P = probs.data() + (b * H + h) * T * T;
                           for (std::size_t t = 0; t < T; ++t) {
                             const double* dout = self.grad.data() + (b * T + t) * d + h * dh;
                             double weighted = 0.0;
                             for (std::size_t s = 0; s < T; ++s) {
                               const double p = P[t * T + s];
                               if (p == 0.0) {
                                 dscore[s] = 0.0;
                                 continue;
                               }
                               if (dv) kernels::axpy(p, dout, dv + (b * T + s) * d + h * dh, dh);
                               dscore[s] = kernels::dot(dout, vv + (b * T + s) * d + h * dh, dh);
                               weighted += p * dscore[s];
                             }
                             for (std::size_t s = 0; s < T; ++s) {
                               const double p = P[t * T + s];
                               if (p == 0.0) continue;
                               const double g = p * (dscore[s] - weighted) * inv_scale;
                               if (dq) kernels::axpy(g, kv + (b * T + s) * d + h * dh, dq + (b * T + t) * d + h * dh, dh);
                               if (dk) kernels::axpy(g, qv + (b * T + t) * d + h * dh, dk + (b * T + s) * d + h * dh, dh);
                             }
                           }
                         }
                       }
                     });
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "mse_loss");
  const std::size_t n = pred.numel();
  const double loss = kernels::squared_distance(pred.data().data(), target.data().data(), n) /
                      static_cast<double>(n);
  return make_result({1}, {loss}, {&pred, &target}, [n](Node& self) {
    const double* p = parent_value(self, 0);
    const double* t = parent_value(self, 1);
    const double c = 2.0 * self.grad[0] / static_cast<double>(n);
    if (double* dp = grad_of(self, 0))
      for (std::size_t i = 0; i < n; ++i) dp[i] += c * (p[i] - t[i]);
    if (double* dt = grad_of(self, 1))
      for (std::size_t i = 0; i < n; ++i) dt[i] -= c * (p[i] - t[i]);
  });
}

std::vector<double> log_softmax_rows(std::span<const double> logits, std::size_t cols) {
  std::vector<double> out(logits.begin(), logits.end());
  for (std::size_t r = 0; r * cols < out.size(); ++r) {
    double* row = out.data() + r * cols;
    const double mx = *std::max_element(row, row + cols);
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) z += std::exp(row[j] - mx);
    const double lz = mx + std::log(z);
    for (std::size_t j = 0; j < cols; ++j) row[j] -= lz;
  }
  return out;
}

Tensor cross_entropy_loss(const Tensor& logits, std::span<const TokenId> targets, TokenId pad_id) {
  const std::size_t rows = logits.rows(), V = logits.cols();
  if (targets.size() != rows) {
    throw DimensionError("cross_entropy_loss: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(rows) + " logit rows");
  }
  std::size_t count = 0;
  for (TokenId t : targets) {
    if (t == pad_id) continue;
    if (t < 0 || static_cast<std::size_t>(t) >= V) {
      throw DimensionError("cross_entropy_loss: target id " + std::to_string(t) + " out of range for " +
                           std::to_string(V) + " classes");
    }
    ++count;
  }
  std::vector<double> logp = log_softmax_rows(logits.data(), V);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r)
    if (targets[r] != pad_id) loss -= logp[r * V + static_cast<std::size_t>(targets[r])];
  if (count > 0) loss /= static_cast<double>(count);
  std::vector<TokenId> tgt(targets.begin(), targets.end());
  return make_result({1}, {loss}, {&logits},
                     [V, count, pad_id, tgt = std::move(tgt), logp = std::move(logp)](Node& self) {
                       if (count == 0) return;
                       double* dl = grad_of(self, 0);
                       if (!dl) return;
                       const double c = self.grad[0] / static_cast<double>(count);
                       for (std::size_t r = 0; r < tgt.size(); ++r) {
                         if (tgt[r] == pad_id) continue;
                         for (std::size_t j = 0; j < V; ++j) dl[r * V + j] += c * std::exp(logp[r * V + j]);
                         dl[r * V + static_cast<std::size_t>(tgt[r])] -= c;
                       }
                     });
}

}  // namespace neurodict::numerics
