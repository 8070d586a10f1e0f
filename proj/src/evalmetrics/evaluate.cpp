// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#include "neurodict/evalmetrics/evaluate.hpp"

#include <map>

#include "neurodict/errors.hpp"

namespace neurodict::evalmetrics {

RevdicEvaluation evaluate_revdic(model::UnifiedModel& model, const data::Vocabulary& vocab,
                                 const std::vector<data::DictEntry>& entries,
                                 const data::EmbeddingTable& candidates) {
  if (entries.empty()) throw UsageError("no test entries to evaluate");
  if (candidates.empty()) throw UsageError("candidate table is empty");
  if (candidates.dim() != model.config().d_w) {
    throw DimensionError("candidate table has dimension " + std::to_string(candidates.dim()) + ", model d_w is " +
                         std::to_string(model.config().d_w));
  }
  const auto predicted = inference::predict_word_vectors(model, vocab, entries);
  const std::size_t d = model.config().d_w;
  RevdicEvaluation out;
  out.ranks.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto r = inference::rank_candidates(std::span(predicted).subspan(i * d, d), candidates, entries[i].word);
    out.ranks.push_back(r.gold_rank);
  }
  out.report = retrieval_report(out.ranks);
  return out;
}

DefmodEvaluation evaluate_defmod(model::UnifiedModel& model, const data::Vocabulary& vocab,
                                 const std::vector<data::DictEntry>& entries, const inference::BeamOptions& options) {
  if (entries.empty()) throw UsageError("no test entries to evaluate");
  std::map<std::string, std::vector<Tokens>> refs_by_word;
  for (const auto& e : entries) refs_by_word[e.word].push_back(e.definition);

  DefmodEvaluation out;
  std::vector<Tokens> hypotheses;
  std::vector<std::vector<Tokens>> references;
  for (const auto& e : entries) {
    const auto best = inference::beam_search_word(model, e.word_vector, options);
    std::string text = vocab.decode(best.tokens);
    hypotheses.push_back(data::split_whitespace(text));
    references.push_back(refs_by_word[e.word]);
    out.generations.push_back(std::move(text));
  }
  out.report = generation_report(hypotheses, references);
  return out;
}

}  // namespace neurodict::evalmetrics
