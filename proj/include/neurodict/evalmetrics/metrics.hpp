// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace neurodict::evalmetrics {

using Tokens = std::vector<std::string>;

struct RetrievalReport {
  double acc_at_1 = 0.0;
  double acc_at_10 = 0.0;
  double acc_at_100 = 0.0;
  double median_rank = 0.0;
  /// Population std after mapping ranks above 100 to 1000.
  double rank_std_forced = 0.0;
  /// Population std of the raw ranks.
  double rank_std_real = 0.0;
  std::size_t n = 0;

  bool operator==(const RetrievalReport&) const = default;
};

/// Ranks are 1-based. Throws UsageError on an empty list or a zero rank.
RetrievalReport retrieval_report(std::span<const std::size_t> ranks);

inline constexpr std::size_t kForcedRankThreshold = 100;
inline constexpr double kForcedRankValue = 1000.0;

/// Corpus BLEU-4 with uniform weights: clipped n-gram counts pooled over the
/// corpus (clipping against the max count in any reference; each hypothesis
/// contributes at least 1 to every denominator, as NLTK does), brevity penalty
/// from the closest reference length (shorter wins ties), no smoothing. Any
/// zero numerator gives 0. Throws UsageError on an empty corpus, mismatched
/// lengths or a hypothesis without references.
double corpus_bleu(std::span<const Tokens> hypotheses, std::span<const std::vector<Tokens>> references);

inline constexpr double kRougeBeta = 1.0;

/// LCS-based F-measure. Throws UsageError when either sequence is empty.
double rouge_l_f1(const Tokens& hypothesis, const Tokens& reference);

/// Mean over instances of the best F1 against that instance's references.
double corpus_rouge_l(std::span<const Tokens> hypotheses, std::span<const std::vector<Tokens>> references);

std::size_t lcs_length(const Tokens& a, const Tokens& b);

struct GenerationReport {
  double corpus_bleu = 0.0;
  double rouge_l_f1 = 0.0;
  std::size_t n = 0;

  bool operator==(const GenerationReport&) const = default;
};

GenerationReport generation_report(std::span<const Tokens> hypotheses,
                                   std::span<const std::vector<Tokens>> references);

/// Human-readable tables and machine-readable JSON.
std::string format_retrieval_table(const RetrievalReport& r);
std::string format_generation_table(const GenerationReport& r);
std::string retrieval_json(const RetrievalReport& r);
std::string generation_json(const GenerationReport& r);

}  // namespace neurodict::evalmetrics
