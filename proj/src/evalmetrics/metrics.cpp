// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#include "neurodict/evalmetrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <nlohmann/json.hpp>

#include "neurodict/errors.hpp"

namespace neurodict::evalmetrics {
namespace {

constexpr std::size_t kMaxOrder = 4;

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts out;
  if (tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) ++out[Tokens(tokens.begin() + i, tokens.begin() + i + n)];
  return out;
}

double population_std(std::span<const double> xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(xs.size()));
}

void check_corpus(std::span<const Tokens> hypotheses, std::span<const std::vector<Tokens>> references) {
  if (hypotheses.empty()) throw UsageError("cannot score an empty corpus");
  if (hypotheses.size() != references.size()) {
    throw UsageError("corpus has " + std::to_string(hypotheses.size()) + " hypotheses but " +
                     std::to_string(references.size()) + " reference sets");
  }
  for (const auto& refs : references)
    if (refs.empty()) throw UsageError("every hypothesis needs at least one reference");
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

RetrievalReport retrieval_report(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw UsageError("retrieval report needs at least one rank");
  RetrievalReport r;
  r.n = ranks.size();
  std::vector<double> raw, forced;
  std::size_t at1 = 0, at10 = 0, at100 = 0;
  for (std::size_t rank : ranks) {
    if (rank == 0) throw UsageError("ranks are 1-based");
    at1 += rank <= 1;
    at10 += rank <= 10;
    at100 += rank <= 100;
    raw.push_back(static_cast<double>(rank));
    forced.push_back(rank > kForcedRankThreshold ? kForcedRankValue : static_cast<double>(rank));
  }
  const double n = static_cast<double>(r.n);
  r.acc_at_1 = static_cast<double>(at1) / n;
  r.acc_at_10 = static_cast<double>(at10) / n;
  r.acc_at_100 = static_cast<double>(at100) / n;
  std::vector<double> sorted = raw;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  r.median_rank = sorted.size() % 2 == 1 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2.0;
  r.rank_std_real = population_std(raw);
  r.rank_std_forced = population_std(forced);
  return r;
}

double corpus_bleu(std::span<const Tokens> hypotheses, std::span<const std::vector<Tokens>> references) {
  check_corpus(hypotheses, references);
  std::array<std::size_t, kMaxOrder> matched{}, total{};
  std::size_t hyp_len = 0, ref_len = 0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const Tokens& hyp = hypotheses[i];
    for (std::size_t n = 1; n <= kMaxOrder; ++n) {
      const auto counts = ngrams(hyp, n);
      NgramCounts max_ref;
      for (const auto& ref : references[i])
        for (const auto& [gram, c] : ngrams(ref, n)) max_ref[gram] = std::max(max_ref[gram], c);
      std::size_t hyp_total = 0;
      for (const auto& [gram, c] : counts) {
        const auto it = max_ref.find(gram);
        matched[n - 1] += std::min(c, it == max_ref.end() ? std::size_t{0} : it->second);
        hyp_total += c;
      }
      // Per-hypothesis denominator floor of 1, as in NLTK's modified precision.
      total[n - 1] += std::max<std::size_t>(1, hyp_total);
    }
    hyp_len += hyp.size();
    std::size_t closest = references[i].front().size();
    for (const auto& ref : references[i]) {
      const auto d = [&](std::size_t len) { return len > hyp.size() ? len - hyp.size() : hyp.size() - len; };
      if (d(ref.size()) < d(closest) || (d(ref.size()) == d(closest) && ref.size() < closest)) closest = ref.size();
    }
    ref_len += closest;
  }
  double log_sum = 0.0;
  for (std::size_t n = 0; n < kMaxOrder; ++n) {
    if (matched[n] == 0 || total[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matched[n]) / static_cast<double>(total[n]));
  }
  const double bp = hyp_len > ref_len ? 1.0
                                      : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return bp * std::exp(log_sum / static_cast<double>(kMaxOrder));
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l_f1(const Tokens& hypothesis, const Tokens& reference) {
  if (hypothesis.empty() || reference.empty()) throw UsageError("ROUGE-L needs non-empty sequences");
  const double l = static_cast<double>(lcs_length(hypothesis, reference));
  if (l == 0.0) return 0.0;
  const double p = l / static_cast<double>(hypothesis.size());
  const double r = l / static_cast<double>(reference.size());
  const double b2 = kRougeBeta * kRougeBeta;
  return (1.0 + b2) * p * r / (r + b2 * p);
}

double corpus_rouge_l(std::span<const Tokens> hypotheses, std::span<const std::vector<Tokens>> references) {
  check_corpus(hypotheses, references);
  double total = 0.0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    if (hypotheses[i].empty()) continue;  // an empty generation scores 0
    double best = 0.0;
    for (const auto& ref : references[i]) best = std::max(best, rouge_l_f1(hypotheses[i], ref));
    total += best;
  }
  return total / static_cast<double>(hypotheses.size());
}

GenerationReport generation_report(std::span<const Tokens> hypotheses,
                                   std::span<const std::vector<Tokens>> references) {
  return {corpus_bleu(hypotheses, references), corpus_rouge_l(hypotheses, references), hypotheses.size()};
}

std::string format_retrieval_table(const RetrievalReport& r) {
  std::string out = "median_rank  acc@1  acc@10  acc@100  rank_std(forced)  rank_std(real)  n\n";
  out += fixed(r.median_rank, 1) + "  " + fixed(r.acc_at_1, 3) + "  " + fixed(r.acc_at_10, 3) + "  " +
         fixed(r.acc_at_100, 3) + "  " + fixed(r.rank_std_forced, 2) + "  " + fixed(r.rank_std_real, 2) + "  " +
         std::to_string(r.n) + "\n";
  return out;
}

std::string format_generation_table(const GenerationReport& r) {
  return "BLEU  ROUGE-L  n\n" + fixed(100.0 * r.corpus_bleu, 2) + "  " + fixed(100.0 * r.rouge_l_f1, 2) + "  " +
         std::to_string(r.n) + "\n";
}

std::string retrieval_json(const RetrievalReport& r) {
  nlohmann::ordered_json j;
  j["mode"] = "revdic";
  j["median_rank"] = r.median_rank;
  j["acc_at_1"] = r.acc_at_1;
  j["acc_at_10"] = r.acc_at_10;
  j["acc_at_100"] = r.acc_at_100;
  j["rank_std_forced"] = r.rank_std_forced;
  j["rank_std_real"] = r.rank_std_real;
  j["n"] = r.n;
  return j.dump(2) + "\n";
}

std::string generation_json(const GenerationReport& r) {
  nlohmann::ordered_json j;
  j["mode"] = "defmod";
  j["corpus_bleu"] = r.corpus_bleu;
  j["rouge_l_f1"] = r.rouge_l_f1;
  j["n"] = r.n;
  return j.dump(2) + "\n";
}

}  // namespace neurodict::evalmetrics
