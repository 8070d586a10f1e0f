// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neurodict/data/dataset.hpp"
#include "neurodict/data/embeddings.hpp"
#include "neurodict/data/vocab.hpp"
#include "neurodict/model/model.hpp"

namespace neurodict::inference {

using model::UnifiedModel;
using numerics::TokenId;

struct RankedItem {
  std::string word;
  double distance = 0.0;

  bool operator==(const RankedItem&) const = default;
};

struct RankedRetrieval {
  /// Ascending squared Euclidean distance, ties broken by word.
  std::vector<RankedItem> ranking;
  /// 1-based rank of the gold word; table size + 1 when it is absent or no
  /// gold word was given.
  std::size_t gold_rank = 0;
};

/// Ranks every candidate by squared Euclidean distance to `predicted`.
RankedRetrieval rank_candidates(std::span<const double> predicted, const data::EmbeddingTable& candidates,
                                const std::optional<std::string>& gold = std::nullopt);

/// Predicted word vector decode_word(encode_definition(BOS text EOS)).
std::vector<double> predict_word_vector(UnifiedModel& model, const data::Vocabulary& vocab,
                                        std::span<const std::string> definition_tokens);

/// Predicted vectors for many entries at once (row-major, entries x d_w).
std::vector<double> predict_word_vectors(UnifiedModel& model, const data::Vocabulary& vocab,
                                         std::span<const data::DictEntry> entries, std::size_t batch_size = 64);

/// Throws UsageError on an empty definition or an empty table, DimensionError
/// when the table dimension differs from the model's d_w.
RankedRetrieval reverse_lookup(UnifiedModel& model, const data::Vocabulary& vocab,
                               std::span<const std::string> definition_tokens, const data::EmbeddingTable& candidates,
                               const std::optional<std::string>& gold = std::nullopt);

struct BeamHypothesis {
  /// Starts with BOS.
  std::vector<TokenId> tokens;
  double log_prob = 0.0;
  bool finished = false;

  std::size_t generated() const { return tokens.size() - 1; }
  /// Cumulative log-probability divided by the generated-token count.
  double normalized_score() const;

  bool operator==(const BeamHypothesis&) const = default;
};

struct BeamOptions {
  std::size_t beam_size = 6;
  /// Generated tokens, EOS included.
  std::size_t max_len = 32;
};

/// Log-probabilities of the next token after `prefix` for each row of `shared`
/// ([n x d_share]); all prefixes share one length. PAD and BOS are set to
/// -inf because they are never valid outputs.
std::vector<std::vector<double>> next_token_log_probs(UnifiedModel& model, const std::vector<double>& shared_rows,
                                                      const std::vector<std::vector<TokenId>>& prefixes);

/// Argmax decoding; ties go to the lowest id.
BeamHypothesis greedy_decode(UnifiedModel& model, std::span<const double> shared, std::size_t max_len);

/// Beam search conditioned on one shared vector. Expansion keeps the
/// beam_size best cumulative log-probabilities; hypotheses ending in EOS or
/// reaching max_len retire to a completed pool, which also receives the greedy
/// decode. The best completed hypothesis by normalized score wins.
BeamHypothesis beam_search(UnifiedModel& model, std::span<const double> shared, const BeamOptions& options);

/// encode_word then beam_search.
BeamHypothesis beam_search_word(UnifiedModel& model, std::span<const double> word_vector,
                                const BeamOptions& options);

/// Vector for `word`: the sum of `subword_vectors` when given, else the table
/// entry. Throws LookupMiss when neither is available.
std::vector<double> resolve_word(const std::string& word, const data::EmbeddingTable* table,
                                 const std::vector<std::vector<double>>* subword_vectors = nullptr);

/// Beam search from the resolved vector, decoded to text without specials.
std::string generate_definition(UnifiedModel& model, const data::Vocabulary& vocab, const std::string& word,
                                const data::EmbeddingTable* table, const BeamOptions& options,
                                const std::vector<std::vector<double>>* subword_vectors = nullptr);

}  // namespace neurodict::inference
