// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one [PASS]/[FAIL] line per criterion and exits
// non-zero if any fails. Writes ablation.tsv into the working directory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "metric_fixtures.hpp"
#include "neurodict/cli/grad_suite.hpp"
#include "neurodict/data/batch.hpp"
#include "neurodict/data/embeddings.hpp"
#include "neurodict/evalmetrics/evaluate.hpp"
#include "neurodict/inference/inference.hpp"
#include "neurodict/training/checkpoint.hpp"
#include "neurodict/training/trainer.hpp"
#include "oracles.hpp"

using namespace neurodict;
using model::LossKind;
using model::ModelConfig;
using model::UnifiedModel;
using numerics::Tensor;
using numerics::TokenId;
using training::TaskPreset;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Collects sub-check failures for one criterion.
struct Verdict {
  std::vector<std::string> failures;
  std::string detail;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

bool all_zero(std::span<const double> g) {
  return std::all_of(g.begin(), g.end(), [](double x) { return x == 0.0; });
}

bool same_values(const Tensor& a, const Tensor& b) {
  return a.numel() == b.numel() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

// Synthetic dictionary: unique definitions of 3..8 tokens drawn from t0..t55,
// word vectors uniform in [-1, 1].
struct Synthetic {
  std::vector<data::DictEntry> entries;
  data::Vocabulary vocab;
  data::EmbeddingTable table;
};

Synthetic synthetic_dictionary(std::size_t words, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> pool;
  for (int i = 0; i < 56; ++i) pool.push_back("t" + std::to_string(i));
  Synthetic s;
  s.table = data::EmbeddingTable(dim);
  std::set<std::string> seen;
  std::vector<std::string> defs;
  for (std::size_t i = 0; i < words; ++i) {
    data::DictEntry e;
    e.word = "word" + std::to_string(i);
    std::string text;
    do {
      e.definition.clear();
      const std::size_t len = 3 + rng() % 6;
      for (std::size_t k = 0; k < len; ++k) e.definition.push_back(pool[rng() % pool.size()]);
      text = data::definition_text(e);
    } while (!seen.insert(text).second);
    for (std::size_t j = 0; j < dim; ++j) e.word_vector.push_back(2.0 * numerics::uniform01(rng) - 1.0);
    s.table.add(e.word, e.word_vector);
    s.entries.push_back(e);
    defs.push_back(text);
  }
  s.vocab = data::build_whitespace_vocab(defs);
  return s;
}

ModelConfig small_config(std::size_t vocab_size, std::size_t d_w, bool tied = true) {
  ModelConfig c;
  c.d_w = d_w;
  c.d_tok = 8;
  c.d_share = 6;
  c.d_ff = 16;
  c.depth = 2;
  c.heads = 2;
  c.dropout_transformer = c.dropout_linear = c.dropout_token = 0.0;
  c.tie_embeddings = tied;
  c.vocab_size = vocab_size;
  return c;
}

// 1 -------------------------------------------------------------------------
Verdict gradient_suite() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto entries = cli::run_grad_suite();
  const double elapsed = seconds_since(t0);
  double worst = 0.0;
  for (const auto& e : entries) {
    v.expect(e.passed && e.max_rel_error <= cli::kGradTolerance, e.name);
    worst = std::max(worst, e.max_rel_error);
  }
  v.expect(elapsed < 120.0, "runtime");
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu checks, worst rel err %.2e (tol %.0e), %.1fs", entries.size(), worst,
                cli::kGradTolerance, elapsed);
  v.detail = buf;
  return v;
}

// 2 -------------------------------------------------------------------------
Verdict structural_bottleneck() {
  Verdict v;
  const auto s = synthetic_dictionary(6, 5, 31);
  std::vector<std::size_t> idx(s.entries.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const auto batch = data::make_batch(s.entries, idx, s.vocab);
  std::size_t zero_checked = 0;
  for (bool tied : {true, false}) {
    const std::string tag = tied ? "tied " : "untied ";
    const ModelConfig c = small_config(s.vocab.size(), 5, tied);
    {
      UnifiedModel m(c, 17);
      m.forward_losses(batch).part(LossKind::defmod).backward();
      for (const Tensor& p : m.encoder_stack_parameters()) {
        v.expect(all_zero(p.grad()), tag + "defmod reaches T_in");
        ++zero_checked;
      }
      if (!tied) v.expect(all_zero(m.encoder_embedding().grad()), tag + "defmod reaches encoder embedding");
    }
    {
      UnifiedModel m(c, 17);
      m.forward_losses(batch).part(LossKind::revdic).backward();
      for (const Tensor& p : m.decoder_stack_parameters()) {
        v.expect(all_zero(p.grad()), tag + "revdic reaches T_out");
        ++zero_checked;
      }
      if (!tied) {
        v.expect(all_zero(m.decoder_embedding().grad()), tag + "revdic reaches decoder embedding");
        v.expect(all_zero(m.output_projection().grad()), tag + "revdic reaches output projection");
      }
    }
    {
      UnifiedModel m(c, 17);
      m.forward_losses(batch).total.backward();
      v.expect(!all_zero(m.find_parameter("l_share.w")->grad()), tag + "total leaves L_share without gradient");
      v.expect(!all_zero(m.find_parameter("l_share.b")->grad()), tag + "total leaves L_share bias without gradient");
    }
  }
  v.detail = std::to_string(zero_checked) + " stack tensors exactly zero, L_share gradient nonzero (tied and untied)";
  return v;
}

// 3 -------------------------------------------------------------------------
Verdict overfit_oracle() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto s = synthetic_dictionary(50, 16, 2024);
  ModelConfig c;
  c.d_w = 16;
  c.d_tok = c.d_share = 32;
  c.d_ff = 64;
  c.depth = 1;
  c.heads = 2;
  c.dropout_transformer = c.dropout_linear = c.dropout_token = 0.0;
  c.vocab_size = s.vocab.size();
  training::TrainConfig t;
  t.lr = 3e-3;
  t.weight_decay = 0.0;
  t.batch_size = 10;
  t.max_epochs = 300;
  t.patience = 20;
  t.seed = 1;
  training::Trainer trainer(UnifiedModel(c, 1), s.entries, s.entries, s.vocab, t);
  trainer.run();
  const auto& h = trainer.history();
  v.expect(h.best_index.has_value(), "no selectable validation");
  if (!h.best_index) return v;
  const double start = h.records.front().train_total;
  const double end = h.records[*h.best_index].train_total;
  const double drop = 1.0 - end / start;
  v.expect(drop >= 0.9, "loss drop below 90%");
  UnifiedModel best = trainer.best_model();
  const auto rev = evalmetrics::evaluate_revdic(best, s.vocab, s.entries, s.table);
  v.expect(rev.report.acc_at_1 == 1.0, "acc@1 below 1");
  std::size_t exact = 0;
  for (const auto& e : s.entries)
    exact += inference::generate_definition(best, s.vocab, e.word, &s.table, {6, 32}) == data::definition_text(e);
  v.expect(exact >= 45, "fewer than 45 exact glosses");
  const double elapsed = seconds_since(t0);
  v.expect(elapsed < 600.0, "runtime");
  char buf[200];
  std::snprintf(buf, sizeof buf, "V=%zu, %zu epochs, loss %.4g -> %.4g (drop %.1f%%), acc@1 %.3f, exact %zu/50, %.1fs",
                s.vocab.size(), h.records.back().epoch, start, end, 100.0 * drop, rev.report.acc_at_1, exact,
                elapsed);
  v.detail = buf;
  return v;
}

// 4 -------------------------------------------------------------------------
Verdict ablation_harness() {
  Verdict v;
  auto s = synthetic_dictionary(24, 6, 77);
  const std::vector<data::DictEntry> train(s.entries.begin(), s.entries.begin() + 18);
  const std::vector<data::DictEntry> dev(s.entries.begin() + 18, s.entries.end());
  const ModelConfig mc = small_config(s.vocab.size(), 6);
  training::TrainConfig tc;
  tc.lr = 3e-3;
  tc.batch_size = 6;
  tc.max_epochs = 6;
  tc.patience = 100;
  tc.seed = 5;
  const std::vector<TaskPreset> presets{TaskPreset::revdic_only, TaskPreset::defmod_only, TaskPreset::three_task,
                                        TaskPreset::five_task};
  const auto runs = training::run_ablation(train, dev, s.vocab, mc, tc, presets);
  const std::string table = training::ablation_tsv(runs);
  std::ofstream("ablation.tsv") << table;
  std::cout << table;

  v.expect(runs.size() == presets.size(), "missing preset");
  for (const auto& r : runs) {
    v.expect(r.history.records.size() == tc.max_epochs + 1, "one row per validation");
    v.expect(r.history.records.front().dev == runs.front().history.records.front().dev, "shared initialization");
  }
  const std::size_t rows = static_cast<std::size_t>(std::count(table.begin(), table.end(), '\n')) - 1;
  v.expect(rows == runs.size() * (tc.max_epochs + 1), "table rows");

  // Excluded paths get exactly zero gradient, and training leaves them as
  // they were at initialization.
  const UnifiedModel init(mc, tc.seed);
  std::vector<std::size_t> idx(train.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const auto batch = data::make_batch(train, idx, s.vocab);
  for (TaskPreset p : {TaskPreset::revdic_only, TaskPreset::defmod_only}) {
    const std::string name(training::preset_name(p));
    const bool revdic = p == TaskPreset::revdic_only;
    UnifiedModel m = init.clone();
    m.set_active_losses(training::preset_losses(p));
    m.forward_losses(batch).total.backward();
    const auto excluded = revdic ? m.decoder_stack_parameters() : m.encoder_stack_parameters();
    for (const Tensor& x : excluded) v.expect(all_zero(x.grad()), name + " excluded gradient");
    if (!revdic) v.expect(all_zero(m.find_parameter("l_out.w")->grad()), name + " word decoder gradient");

    training::TrainConfig cfg = tc;
    cfg.preset = p;
    training::Trainer tr(init.clone(), train, dev, s.vocab, cfg);
    tr.run();
    const auto before = revdic ? init.decoder_stack_parameters() : init.encoder_stack_parameters();
    const auto after = revdic ? tr.model().decoder_stack_parameters() : tr.model().encoder_stack_parameters();
    for (std::size_t i = 0; i < before.size(); ++i) v.expect(same_values(before[i], after[i]), name + " excluded moved");
  }
  v.detail = std::to_string(runs.size()) + " presets x " + std::to_string(tc.max_epochs + 1) +
             " validations written to ablation.tsv; excluded paths zero-gradient and unchanged";
  return v;
}

// 5 -------------------------------------------------------------------------
Verdict metric_oracles() {
  Verdict v;
  std::size_t fixtures = 0;
  for (const auto& f : fixtures::bleu_fixtures()) {
    v.expect(std::abs(evalmetrics::corpus_bleu(f.hypotheses, f.references) - f.expected) <= 1e-9, "BLEU " + f.name);
    ++fixtures;
  }
  for (const auto& f : fixtures::rouge_fixtures()) {
    v.expect(std::abs(evalmetrics::rouge_l_f1(f.hypothesis, f.reference) - f.expected) <= 1e-9, "ROUGE " + f.name);
    ++fixtures;
  }
  std::mt19937_64 rng(99);
  std::size_t forced_checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 60;
    const std::size_t max_rank = trial % 2 ? 100 : 1 + rng() % 3000;
    std::vector<std::size_t> ranks(n);
    for (auto& x : ranks) x = 1 + rng() % max_rank;
    const auto got = evalmetrics::retrieval_report(ranks);
    v.expect(got == oracles::brute_retrieval_report(ranks), "retrieval trial " + std::to_string(trial));
    if (*std::max_element(ranks.begin(), ranks.end()) <= 100) {
      v.expect(got.rank_std_forced == got.rank_std_real, "forced std trial " + std::to_string(trial));
      ++forced_checked;
    }
  }
  v.detail = std::to_string(fixtures) + " BLEU/ROUGE fixtures within 1e-9; 1000 retrieval trials exact (" +
             std::to_string(forced_checked) + " with forced std == real std)";
  return v;
}

// 6 -------------------------------------------------------------------------
ModelConfig decoder_toy(std::size_t vocab_size) {
  ModelConfig c = small_config(vocab_size, 4);
  c.depth = 1;
  return c;
}

void spread_output_bias(UnifiedModel& m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor bias = *m.find_parameter("t_out.proj_bias");
  for (double& x : bias.data()) x = 3.0 * (2.0 * numerics::uniform01(rng) - 1.0);
}

std::vector<double> random_shared(std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> s(d);
  for (double& x : s) x = 2.0 * numerics::uniform01(rng) - 1.0;
  return s;
}

Verdict beam_search() {
  Verdict v;
  const auto vocab = data::build_whitespace_vocab(std::vector<std::string>{"p q r s t u"});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    UnifiedModel m(decoder_toy(vocab.size()), seed);
    spread_output_bias(m, seed);
    const auto s = random_shared(6, seed);
    const auto g = inference::greedy_decode(m, s, 8);
    const auto b = inference::beam_search(m, s, {1, 8});
    v.expect(b.tokens == g.tokens, "beam 1 differs from greedy, seed " + std::to_string(seed));
  }
  // V = 5: PAD, BOS, EOS, UNK and one word. PAD and BOS are never emitted.
  const data::Vocabulary tiny(data::VocabKind::whitespace, {"x"});
  v.expect(tiny.size() == 5, "toy vocabulary size");
  const std::vector<TokenId> emit{data::kEos, data::kUnk, 4};
  const std::size_t max_len = 4;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    UnifiedModel m(decoder_toy(tiny.size()), 40 + seed);
    spread_output_bias(m, seed);
    const auto s = random_shared(6, 100 + seed);
    const auto best = oracles::exhaustive_decode(m, s, emit, max_len);
    const auto beam = inference::beam_search(m, s, {625, max_len});
    const std::vector<TokenId> got(beam.tokens.begin() + 1, beam.tokens.end());
    v.expect(got == best.tokens, "beam 625 misses exhaustive argmax, seed " + std::to_string(seed));
  }
  v.detail = "beam 1 == greedy on 10 seeds; beam 625 == exhaustive argmax on 8 seeds (V=5, max_len=4)";
  return v;
}

// 7 -------------------------------------------------------------------------
Verdict tied_embeddings() {
  Verdict v;
  const auto vocab = data::build_whitespace_vocab(std::vector<std::string>{"a b c d e f g"});
  const std::size_t V = vocab.size();
  const ModelConfig tied_cfg = small_config(V, 4, true);
  const ModelConfig untied_cfg = small_config(V, 4, false);
  UnifiedModel m(tied_cfg, 3);
  const UnifiedModel u(untied_cfg, 3);
  // Untying adds a separate decoder-input matrix and output projection.
  const std::size_t derived = 2 * V * tied_cfg.d_tok;
  v.expect(u.parameter_count() - m.parameter_count() == derived, "parameter count difference");
  v.expect(m.encoder_embedding().same_storage(m.decoder_embedding()) &&
               m.encoder_embedding().same_storage(m.output_projection()),
           "views do not share storage");
  v.expect(m.find_parameter("embed.tied") != nullptr, "no tied parameter");

  m.set_training(false);
  const TokenId t = vocab.id("c");
  const TokenId other = vocab.id("f");
  const auto s = random_shared(tied_cfg.d_share, 8);
  const Tensor shared = Tensor::from({1, s.size()}, s);
  auto observe = [&] {
    numerics::NoGradGuard ng;
    std::vector<double> out;
    const std::vector<TokenId> def{data::kBos, t, data::kEos};
    const std::vector<std::uint8_t> mask(3, 1);
    const Tensor enc = m.encode_definition(def, mask, 1, 3);
    out.insert(out.end(), enc.data().begin(), enc.data().end());
    const std::vector<TokenId> p1{data::kBos};
    const std::vector<std::uint8_t> m1(1, 1);
    out.push_back(m.decode_definition_logits(shared, p1, m1, 1, 1).at(0, static_cast<std::size_t>(t)));
    const std::vector<TokenId> p2{data::kBos, t};
    const std::vector<std::uint8_t> m2(2, 1);
    out.push_back(m.decode_definition_logits(shared, p2, m2, 1, 2).at(1, static_cast<std::size_t>(other)));
    return out;
  };
  const auto before = observe();
  Tensor table = *m.find_parameter("embed.tied");
  for (std::size_t j = 0; j < tied_cfg.d_tok; ++j) table.data()[static_cast<std::size_t>(t) * tied_cfg.d_tok + j] += 0.5;
  const auto after = observe();
  const std::size_t d = tied_cfg.d_share;
  v.expect(!std::equal(before.begin(), before.begin() + d, after.begin()), "encoder input site");
  // Position 0 sees only the injected shared vector, so column t moves only
  // through the output projection.
  v.expect(before[d] != after[d], "output projection site");
  // Column `other` at position 1 moves only through the decoder input.
  v.expect(before[d + 1] != after[d + 1], "decoder input site");
  v.detail = "untied - tied = 2*V*d_tok = " + std::to_string(derived) +
             "; row edit seen at encoder input, decoder input and output projection";
  return v;
}

// 8 -------------------------------------------------------------------------
void enumerate_strings(const std::string& prefix, const std::vector<std::string>& alphabet, std::size_t remaining,
                       const std::function<void(const std::string&)>& visit) {
  visit(prefix);
  if (remaining == 0) return;
  for (const auto& a : alphabet) enumerate_strings(prefix + a, alphabet, remaining - 1, visit);
}

Verdict unigram_tokenizer() {
  Verdict v;
  const std::string mark(data::kWordBoundary);
  // "c" is absent as a single piece so unknown characters are exercised.
  const std::vector<std::string> pieces{"a", "b", mark, "ab", "bc", "abc", "ca", mark + "a", "bb", "cab", mark + "ab",
                                        "aa"};
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> lp(-6.0, -0.5);
  std::size_t strings = 0;
  for (int inventory = 0; inventory < 2; ++inventory) {
    std::vector<double> log_probs(pieces.size());
    std::map<std::string, double> table;
    for (std::size_t i = 0; i < pieces.size(); ++i) table[pieces[i]] = log_probs[i] = lp(rng);
    const data::Vocabulary vocab(data::VocabKind::unigram, pieces, log_probs);
    // Boundary marker plus up to 9 letters: every marked word of at most 10 characters.
    enumerate_strings(mark, {"a", "b", "c"}, 9, [&](const std::string& word) {
      const auto ids = vocab.segment_word(word);
      const double want = oracles::exhaustive_segmentation(data::utf8_chars(word), table, vocab.unknown_score());
      if (std::abs(vocab.segmentation_score(ids) - want) > 1e-9 * std::max(1.0, std::abs(want)))
        v.expect(false, "viterbi " + word);
      ++strings;
    });
  }
  const std::vector<std::string> corpus{"the banana band", "a bandana and a cabana", "naan bread", "xyz quiz",
                                        "caf\xC3\xA9 na\xC3\xAFve"};
  const std::size_t floor = data::unigram_min_size(corpus);
  const auto trained = data::train_unigram_vocab(corpus, floor + 12);
  std::set<std::string> chars{mark};
  for (const auto& line : corpus)
    for (const auto& ch : data::utf8_chars(line))
      if (ch != " ") chars.insert(ch);
  for (const auto& ch : chars) v.expect(trained.contains(ch), "lost character " + ch);
  v.detail = std::to_string(strings) + " strings match exhaustive search; trained vocab (" +
             std::to_string(trained.size()) + " ids) keeps all " + std::to_string(chars.size()) + " characters";
  return v;
}

// 9 -------------------------------------------------------------------------
Verdict determinism() {
  Verdict v;
  auto s = synthetic_dictionary(16, 4, 5);
  const std::vector<data::DictEntry> train(s.entries.begin(), s.entries.begin() + 12);
  const std::vector<data::DictEntry> dev(s.entries.begin() + 12, s.entries.end());
  ModelConfig mc = small_config(s.vocab.size(), 4);
  mc.depth = 1;
  mc.dropout_transformer = 0.1;
  mc.dropout_linear = 0.1;
  mc.dropout_token = 0.05;
  training::TrainConfig tc;
  tc.lr = 5e-3;
  tc.batch_size = 5;
  tc.max_epochs = 5;
  tc.patience = 100;
  tc.seed = 7;

  auto full_run = [&] {
    training::Trainer t(UnifiedModel(mc, 13), train, dev, s.vocab, tc);
    t.run();
    return t;
  };
  const auto a = full_run();
  const auto b = full_run();
  const std::string ckpt_a = training::serialize_checkpoint(a.model(), s.vocab, &a.state());
  v.expect(ckpt_a == training::serialize_checkpoint(b.model(), s.vocab, &b.state()), "checkpoint bytes differ");
  v.expect(training::history_tsv(a.history()) == training::history_tsv(b.history()), "histories differ");

  training::Trainer first(UnifiedModel(mc, 13), train, dev, s.vocab, tc);
  first.step_epoch();
  first.step_epoch();
  const std::string saved = training::serialize_checkpoint(first.model(), s.vocab, &first.state());
  training::Trainer resumed = training::resume_trainer(training::deserialize_checkpoint(saved), train, dev);
  resumed.run();
  v.expect(resumed.history() == a.history(), "resumed history differs");
  v.expect(training::serialize_checkpoint(resumed.model(), s.vocab, &resumed.state()) == ckpt_a,
           "resumed checkpoint differs");
  v.detail = "dropout on; repeat runs and resume-after-2-epochs give identical " + std::to_string(ckpt_a.size()) +
             "-byte checkpoints and histories";
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"gradient suite", gradient_suite},       {"structural bottleneck", structural_bottleneck},
      {"overfit oracle", overfit_oracle},       {"ablation harness", ablation_harness},
      {"metric oracles", metric_oracles},       {"beam search", beam_search},
      {"tied embeddings", tied_embeddings},     {"unigram tokenizer", unigram_tokenizer},
      {"determinism", determinism},
  };
  std::vector<std::string> lines;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.failures.push_back(std::string("exception: ") + e.what());
    }
    std::string line = (v.failures.empty() ? "[PASS] " : "[FAIL] ") + std::to_string(i + 1) + " " +
                       criteria[i].first + ": " + v.detail;
    if (!v.failures.empty()) {
      line += " | failed:";
      for (std::size_t k = 0; k < v.failures.size() && k < 5; ++k) line += " " + v.failures[k] + ";";
      if (v.failures.size() > 5) line += " ... (" + std::to_string(v.failures.size()) + " total)";
      ++failed;
    }
    std::cout << line << std::endl;
    lines.push_back(line);
  }
  std::cout << "\nsummary\n";
  for (const auto& l : lines) std::cout << l << "\n";
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
