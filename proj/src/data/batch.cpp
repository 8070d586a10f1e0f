// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#include "neurodict/data/batch.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "neurodict/errors.hpp"

namespace neurodict::data {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Explicit Fisher-Yates: std::shuffle's draw pattern is implementation-defined.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

Batch make_batch(std::span<const DictEntry> entries, std::span<const std::size_t> indices, const Vocabulary& vocab) {
  if (indices.empty()) throw UsageError("cannot build an empty batch");
  Batch b;
  b.size = indices.size();
  const std::size_t dim = entries[indices[0]].word_vector.size();
  if (dim == 0) throw DataError("entry '" + entries[indices[0]].word + "' has no word vector");

  std::vector<std::vector<TokenId>> framed;
  framed.reserve(b.size);
  for (std::size_t idx : indices) {
    const DictEntry& e = entries[idx];
    if (e.word_vector.size() != dim) {
      throw DimensionError("entry '" + e.word + "' has a " + std::to_string(e.word_vector.size()) +
                           "-dim vector, batch expects " + std::to_string(dim));
    }
    std::vector<TokenId> ids{kBos};
    const auto body = vocab.encode(definition_text(e));
    ids.insert(ids.end(), body.begin(), body.end());
    ids.push_back(kEos);
    b.seq_len = std::max(b.seq_len, ids.size());
    framed.push_back(std::move(ids));
  }

  std::vector<double> vecs;
  vecs.reserve(b.size * dim);
  for (std::size_t idx : indices) vecs.insert(vecs.end(), entries[idx].word_vector.begin(), entries[idx].word_vector.end());
  b.word_vectors = numerics::Tensor::from({b.size, dim}, std::move(vecs));

  const std::size_t t = b.seq_len;
  b.token_ids.assign(b.size * t, kPad);
  b.mask.assign(b.size * t, 0);
  b.decoder_input.assign(b.size * (t - 1), kPad);
  b.decoder_targets.assign(b.size * (t - 1), kPad);
  b.decoder_mask.assign(b.size * (t - 1), 0);
  for (std::size_t r = 0; r < b.size; ++r) {
    const auto& ids = framed[r];
    for (std::size_t j = 0; j < ids.size(); ++j) {
      b.token_ids[r * t + j] = ids[j];
      b.mask[r * t + j] = 1;
    }
    for (std::size_t j = 0; j + 1 < t; ++j) {
      b.decoder_input[r * (t - 1) + j] = b.token_ids[r * t + j];
      b.decoder_targets[r * (t - 1) + j] = b.token_ids[r * t + j + 1];
      b.decoder_mask[r * (t - 1) + j] = b.token_ids[r * t + j] == kPad ? 0 : 1;
    }
  }
  b.entry_indices.assign(indices.begin(), indices.end());
  return b;
}

std::vector<Batch> make_batches(std::span<const DictEntry> entries, const Vocabulary& vocab, std::size_t batch_size,
                                std::optional<std::uint64_t> shuffle_seed) {
  if (batch_size < 1) throw UsageError("batch_size must be at least 1");
  std::vector<std::size_t> order;
  if (shuffle_seed) {
    order = shuffled_indices(entries.size(), *shuffle_seed);
  } else {
    order.resize(entries.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    batches.push_back(make_batch(entries, std::span(order).subspan(start, end - start), vocab));
  }
  return batches;
}

}  // namespace neurodict::data
