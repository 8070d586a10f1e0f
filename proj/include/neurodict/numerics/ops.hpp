// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Differentiable operations. Every function here records a backward closure
// when grad mode is on and at least one input requires grad.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "neurodict/numerics/tensor.hpp"

namespace neurodict::numerics {

using TokenId = std::int32_t;

// --- linear algebra -------------------------------------------------------

/// [m x k] * [k x n] -> [m x n]
Tensor matmul(const Tensor& a, const Tensor& b);

/// [m x k] * [n x k]^T -> [m x n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);

// --- elementwise ----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

/// Adds a [1 x n] row to every row of an [m x n] matrix.
Tensor add_row(const Tensor& a, const Tensor& row);

Tensor relu(const Tensor& a);

/// Inverted dropout. Identity (the same tensor) when !training or rate == 0.
Tensor dropout(const Tensor& a, double rate, bool training, std::mt19937_64& rng);

// --- reductions -----------------------------------------------------------

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// --- normalisation --------------------------------------------------------

/// Softmax over the last axis, max-subtracted.
Tensor softmax(const Tensor& a);

/// Normalises each row over the last axis, then applies gamma and beta
/// (both [1 x cols] or [cols]).
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// --- indexing -------------------------------------------------------------

/// Row gather: out[i] = table[ids[i]].
Tensor embedding(const Tensor& table, std::span<const TokenId> ids);

/// Masked mean over each of `batch` groups of `seq_len` consecutive rows.
/// Groups with no unmasked row produce zeros.
Tensor masked_mean_rows(const Tensor& x, std::span<const std::uint8_t> mask, std::size_t batch,
                        std::size_t seq_len);

/// Copy of `base` with row row_indices[i] replaced by row i of `rows`.
Tensor overwrite_rows(const Tensor& base, const Tensor& rows, std::span<const std::size_t> row_indices);

// --- attention ------------------------------------------------------------

struct AttentionLayout {
  std::size_t batch = 1;
  std::size_t seq_len = 1;
  std::size_t heads = 1;
  bool causal = false;
  /// batch * seq_len flags, 1 = real key. Empty means every key is real.
  std::vector<std::uint8_t> key_mask;
};

/// Multi-head scaled dot-product self-attention over `batch` sequences laid
/// out as consecutive row blocks of q, k and v ([batch*seq_len x d]). Head h
/// reads columns [h*d/heads, (h+1)*d/heads). Query rows with no visible key
/// produce zeros.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionLayout& layout);

// --- losses ---------------------------------------------------------------

/// Mean of squared elementwise differences. Differentiable in both arguments.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

/// Mean negative log-softmax probability of the targets over rows whose
/// target is not pad_id. Returns 0 (with zero gradient) when every target is
/// padding.
Tensor cross_entropy_loss(const Tensor& logits, std::span<const TokenId> targets, TokenId pad_id);

// --- non-differentiable helpers ------------------------------------------

/// Row-wise log-softmax on raw values.
std::vector<double> log_softmax_rows(std::span<const double> logits, std::size_t cols);

/// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform01(std::mt19937_64& rng);

}  // namespace neurodict::numerics
