// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#include "neurodict/inference/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "neurodict/data/batch.hpp"
#include "neurodict/errors.hpp"
#include "neurodict/kernels/kernels.hpp"

namespace neurodict::inference {
namespace {

using numerics::Tensor;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Puts the model in eval mode with graph recording off for one scope.
class EvalScope {
 public:
  explicit EvalScope(UnifiedModel& model) : model_(model), was_training_(model.training()) {
    model_.set_training(false);
  }
  ~EvalScope() { model_.set_training(was_training_); }
  EvalScope(const EvalScope&) = delete;
  EvalScope& operator=(const EvalScope&) = delete;

 private:
  UnifiedModel& model_;
  bool was_training_;
  numerics::NoGradGuard no_grad_;
};

bool better(const BeamHypothesis& a, const BeamHypothesis& b) {
  const double sa = a.normalized_score(), sb = b.normalized_score();
  if (sa != sb) return sa > sb;
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.tokens < b.tokens;
}

std::vector<TokenId> frame(const data::Vocabulary& vocab, std::span<const std::string> tokens) {
  std::string text;
  for (const auto& t : tokens) {
    if (!text.empty()) text += ' ';
    text += t;
  }
  std::vector<TokenId> ids{data::kBos};
  const auto body = vocab.encode(text);
  ids.insert(ids.end(), body.begin(), body.end());
  ids.push_back(data::kEos);
  return ids;
}

}  // namespace

double BeamHypothesis::normalized_score() const {
  return generated() == 0 ? log_prob : log_prob / static_cast<double>(generated());
}

RankedRetrieval rank_candidates(std::span<const double> predicted, const data::EmbeddingTable& candidates,
                                const std::optional<std::string>& gold) {
  if (candidates.empty()) throw UsageError("candidate table is empty");
  if (predicted.size() != candidates.dim()) {
    throw DimensionError("predicted vector has dimension " + std::to_string(predicted.size()) +
                         ", candidate table is " + std::to_string(candidates.dim()));
  }
  const std::size_t n = candidates.size();
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = kernels::squared_distance(predicted.data(), candidates.row(i).data(), predicted.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return candidates.word(a) < candidates.word(b);
  });
  RankedRetrieval out;
  out.ranking.reserve(n);
  out.gold_rank = n + 1;
  for (std::size_t r = 0; r < n; ++r) {
    out.ranking.push_back({candidates.word(order[r]), dist[order[r]]});
    if (gold && candidates.word(order[r]) == *gold) out.gold_rank = r + 1;
  }
  return out;
}

std::vector<double> predict_word_vector(UnifiedModel& model, const data::Vocabulary& vocab,
                                        std::span<const std::string> definition_tokens) {
  if (definition_tokens.empty()) throw UsageError("definition is empty");
  EvalScope scope(model);
  const auto ids = frame(vocab, definition_tokens);
  const std::vector<std::uint8_t> mask(ids.size(), 1);
  const Tensor out = model.decode_word(model.encode_definition(ids, mask, 1, ids.size()));
  return {out.data().begin(), out.data().end()};
}

std::vector<double> predict_word_vectors(UnifiedModel& model, const data::Vocabulary& vocab,
                                         std::span<const data::DictEntry> entries, std::size_t batch_size) {
  std::vector<double> out;
  if (entries.empty()) return out;
  EvalScope scope(model);
  out.reserve(entries.size() * model.config().d_w);
  for (std::size_t start = 0; start < entries.size(); start += batch_size) {
    const std::size_t end = std::min(entries.size(), start + batch_size);
    std::vector<std::vector<TokenId>> framed;
    std::size_t len = 0;
    for (std::size_t i = start; i < end; ++i) {
      if (entries[i].definition.empty()) throw UsageError("definition of '" + entries[i].word + "' is empty");
      framed.push_back(frame(vocab, entries[i].definition));
      len = std::max(len, framed.back().size());
    }
    std::vector<TokenId> ids(framed.size() * len, data::kPad);
    std::vector<std::uint8_t> mask(framed.size() * len, 0);
    for (std::size_t r = 0; r < framed.size(); ++r) {
      std::copy(framed[r].begin(), framed[r].end(), ids.begin() + static_cast<std::ptrdiff_t>(r * len));
      std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(r * len), framed[r].size(), 1);
    }
    const Tensor pred = model.decode_word(model.encode_definition(ids, mask, framed.size(), len));
    out.insert(out.end(), pred.data().begin(), pred.data().end());
  }
  return out;
}

RankedRetrieval reverse_lookup(UnifiedModel& model, const data::Vocabulary& vocab,
                               std::span<const std::string> definition_tokens, const data::EmbeddingTable& candidates,
                               const std::optional<std::string>& gold) {
  if (candidates.empty()) throw UsageError("candidate table is empty");
  if (candidates.dim() != model.config().d_w) {
    throw DimensionError("candidate table has dimension " + std::to_string(candidates.dim()) + ", model d_w is " +
                         std::to_string(model.config().d_w));
  }
  return rank_candidates(predict_word_vector(model, vocab, definition_tokens), candidates, gold);
}

std::vector<std::vector<double>> next_token_log_probs(UnifiedModel& model, const std::vector<double>& shared_rows,
                                                      const std::vector<std::vector<TokenId>>& prefixes) {
  const std::size_t n = prefixes.size();
  const std::size_t d = model.config().d_share;
  if (n == 0 || shared_rows.size() != n * d) throw DimensionError("shared rows do not match the prefix count");
  const std::size_t len = prefixes[0].size();
  std::vector<TokenId> ids;
  ids.reserve(n * len);
  for (const auto& p : prefixes) {
    if (p.size() != len) throw DimensionError("prefixes must share one length");
    ids.insert(ids.end(), p.begin(), p.end());
  }
  EvalScope scope(model);
  const std::vector<std::uint8_t> mask(n * len, 1);
  const Tensor shared = Tensor::from({n, d}, shared_rows);
  const Tensor logits = model.decode_definition_logits(shared, ids, mask, n, len);
  const std::size_t v = logits.cols();
  std::vector<std::vector<double>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = numerics::log_softmax_rows(logits.data().subspan((i * len + len - 1) * v, v), v);
    out[i][data::kPad] = kNegInf;
    out[i][data::kBos] = kNegInf;
  }
  return out;
}

BeamHypothesis greedy_decode(UnifiedModel& model, std::span<const double> shared, std::size_t max_len) {
  if (max_len < 1) throw UsageError("max_len must be at least 1");
  const std::vector<double> row(shared.begin(), shared.end());
  BeamHypothesis h{{data::kBos}, 0.0, false};
  while (!h.finished) {
    const auto lp = next_token_log_probs(model, row, {h.tokens})[0];
    const auto best = std::max_element(lp.begin(), lp.end());  // first maximum: lowest id
    h.tokens.push_back(static_cast<TokenId>(best - lp.begin()));
    h.log_prob += *best;
    h.finished = h.tokens.back() == data::kEos || h.generated() >= max_len;
  }
  return h;
}

BeamHypothesis beam_search(UnifiedModel& model, std::span<const double> shared, const BeamOptions& options) {
  if (options.beam_size < 1) throw UsageError("beam_size must be at least 1");
  if (options.max_len < 1) throw UsageError("max_len must be at least 1");
  std::vector<BeamHypothesis> live{{{data::kBos}, 0.0, false}};
  std::vector<BeamHypothesis> completed{greedy_decode(model, shared, options.max_len)};

  struct Candidate {
    double log_prob;
    std::size_t hyp;
    TokenId token;
  };
  while (!live.empty()) {
    std::vector<double> rows;
    std::vector<std::vector<TokenId>> prefixes;
    for (const auto& h : live) {
      rows.insert(rows.end(), shared.begin(), shared.end());
      prefixes.push_back(h.tokens);
    }
    const auto lp = next_token_log_probs(model, rows, prefixes);
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < live.size(); ++i)
      for (std::size_t t = 0; t < lp[i].size(); ++t)
        if (lp[i][t] != kNegInf) cands.push_back({live[i].log_prob + lp[i][t], i, static_cast<TokenId>(t)});
    const std::size_t keep = std::min(options.beam_size, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
                        if (a.hyp != b.hyp) return a.hyp < b.hyp;
                        return a.token < b.token;
                      });
    std::vector<BeamHypothesis> next;
    for (std::size_t c = 0; c < keep; ++c) {
      BeamHypothesis h = live[cands[c].hyp];
      h.tokens.push_back(cands[c].token);
      h.log_prob = cands[c].log_prob;
      h.finished = cands[c].token == data::kEos || h.generated() >= options.max_len;
      (h.finished ? completed : next).push_back(std::move(h));
    }
    live = std::move(next);
  }
  return *std::min_element(completed.begin(), completed.end(), better);
}

BeamHypothesis beam_search_word(UnifiedModel& model, std::span<const double> word_vector,
                                const BeamOptions& options) {
  std::vector<double> shared;
  {
    EvalScope scope(model);
    const Tensor w = Tensor::from({1, word_vector.size()}, {word_vector.begin(), word_vector.end()});
    const Tensor s = model.encode_word(w);
    shared.assign(s.data().begin(), s.data().end());
  }
  return beam_search(model, shared, options);
}

std::vector<double> resolve_word(const std::string& word, const data::EmbeddingTable* table,
                                 const std::vector<std::vector<double>>* subword_vectors) {
  if (subword_vectors && !subword_vectors->empty()) return data::aggregate_subword_vectors(*subword_vectors);
  if (table) {
    if (auto v = table->lookup(word)) return {v->begin(), v->end()};
  }
  throw LookupMiss(word);
}

std::string generate_definition(UnifiedModel& model, const data::Vocabulary& vocab, const std::string& word,
                                const data::EmbeddingTable* table, const BeamOptions& options,
                                const std::vector<std::vector<double>>* subword_vectors) {
  const auto vec = resolve_word(word, table, subword_vectors);
  if (vec.size() != model.config().d_w) {
    throw DimensionError("vector for '" + word + "' has dimension " + std::to_string(vec.size()) + ", model d_w is " +
                         std::to_string(model.config().d_w));
  }
  const auto best = beam_search_word(model, vec, options);
  return vocab.decode(best.tokens);
}

}  // namespace neurodict::inference
