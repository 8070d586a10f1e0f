// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "neurodict/data/dataset.hpp"
#include "neurodict/data/vocab.hpp"
#include "neurodict/numerics/tensor.hpp"

namespace neurodict::data {

/// Padded minibatch. Definitions are framed BOS ... EOS and right-padded with
/// PAD to the longest framed definition in the batch (seq_len).
struct Batch {
  std::size_t size = 0;
  std::size_t seq_len = 0;
  numerics::Tensor word_vectors;          // size x d_w
  std::vector<TokenId> token_ids;         // size x seq_len
  std::vector<std::uint8_t> mask;         // size x seq_len, 1 on real tokens
  std::vector<TokenId> decoder_input;     // size x (seq_len - 1), token_ids without the last column
  std::vector<TokenId> decoder_targets;   // size x (seq_len - 1), token_ids shifted left by one
  std::vector<std::uint8_t> decoder_mask; // 1 where decoder_input is not PAD
  std::vector<std::size_t> entry_indices; // positions in the source entry list

  std::size_t decoder_len() const { return seq_len - 1; }
};

/// Builds one batch from the given entry positions, in that order.
Batch make_batch(std::span<const DictEntry> entries, std::span<const std::size_t> indices, const Vocabulary& vocab);

/// Splits entries into batches of batch_size (last partial batch kept). With a
/// seed the order is a seeded shuffle; without one it is the input order.
std::vector<Batch> make_batches(std::span<const DictEntry> entries, const Vocabulary& vocab, std::size_t batch_size,
                                std::optional<std::uint64_t> shuffle_seed);

/// Seeded Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

}  // namespace neurodict::data
