// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "neurodict/data/batch.hpp"
#include "neurodict/data/dataset.hpp"
#include "neurodict/data/embeddings.hpp"
#include "neurodict/data/vocab.hpp"
#include "neurodict/errors.hpp"
#include "oracles.hpp"

using namespace neurodict::data;
using neurodict::DataError;
using neurodict::DimensionError;
using neurodict::UsageError;

namespace {

std::vector<DictEntry> parse(const std::string& text, DatasetOptions opts = {}) {
  std::istringstream in(text);
  return parse_dataset(in, "mem.jsonl", opts);
}

std::string vec_json(std::size_t dim, double v) {
  std::string s = "[";
  for (std::size_t i = 0; i < dim; ++i) s += (i ? "," : "") + std::to_string(v);
  return s + "]";
}

DictEntry entry(std::string word, std::string def, std::vector<double> vec) {
  DictEntry e;
  e.word = std::move(word);
  e.definition = split_whitespace(def);
  e.word_vector = std::move(vec);
  return e;
}

}  // namespace

TEST_CASE("empty dataset file gives an empty list") { CHECK(parse("").empty()); }

TEST_CASE("dataset record round-trips through write and parse") {
  const auto got = parse(R"({"word": "cat", "definition": "a small feline", "word_vector": [0.5, -1.25]})");
  REQUIRE(got.size() == 1);
  CHECK(got[0].word == "cat");
  CHECK(got[0].definition == std::vector<std::string>{"a", "small", "feline"});
  CHECK(got[0].word_vector == std::vector<double>{0.5, -1.25});
  CHECK_FALSE(got[0].context_subword_vectors.has_value());

  std::ostringstream out;
  write_dataset(out, got);
  CHECK(parse(out.str()) == got);
}

TEST_CASE("dimension mismatch cites the line and field") {
  const std::string text = "{\"word\": \"a\", \"definition\": \"x\", \"word_vector\": " + vec_json(300, 0.1) +
                           "}\n\n{\"word\": \"b\", \"definition\": \"y\", \"word_vector\": " + vec_json(299, 0.1) + "}\n";
  try {
    parse(text, {.dim = 300});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.line() == 3);
    const std::string msg = e.what();
    CHECK(msg.find("mem.jsonl:3") != std::string::npos);
    CHECK(msg.find("word_vector") != std::string::npos);
    CHECK(msg.find("299") != std::string::npos);
  }
}

TEST_CASE("malformed records are located errors") {
  const char* bad[] = {
      "{not json",
      R"({"word": "a", "word_vector": [1]})",
      R"({"word": "a", "definition": "", "word_vector": [1]})",
      R"({"word": "a", "definition": "x", "word_vector": [1], "extra": 1})",
      R"({"word": 3, "definition": "x"})",
      R"({"word": "a", "definition": "x", "word_vector": ["q"]})",
      R"({"word": "a", "definition": "x", "context_subword_vectors": []})",
  };
  for (const char* line : bad) {
    CAPTURE(line);
    try {
      parse(std::string("\n") + line);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.line() == 2);
    }
  }
}

TEST_CASE("subword vectors are summed into the word vector") {
  const auto got = parse(R"({"word": "run", "definition": "move fast", "context_subword_vectors": [[1, 2], [3, 4]]})");
  REQUIRE(got.size() == 1);
  CHECK(got[0].word_vector == std::vector<double>{4, 6});
  CHECK(got[0].context_subword_vectors->size() == 2);
}

TEST_CASE("aggregate_subword_vectors") {
  const std::vector<std::vector<double>> one{{1.5, -2.0, 3.0}};
  CHECK(aggregate_subword_vectors(one) == one[0]);
  const std::vector<std::vector<double>> two{{1, 2}, {3, 4}};
  CHECK(aggregate_subword_vectors(two) == std::vector<double>{4, 6});
  CHECK_THROWS_AS(aggregate_subword_vectors({}), DataError);
  const std::vector<std::vector<double>> ragged{{1, 2}, {3}};
  CHECK_THROWS_AS(aggregate_subword_vectors(ragged), DimensionError);

  // Permutation invariance on integer-valued vectors (exact in floating point).
  std::mt19937_64 rng(5);
  std::vector<std::vector<double>> many(7, std::vector<double>(5));
  for (auto& v : many)
    for (double& x : v) x = static_cast<double>(static_cast<int>(rng() % 21) - 10);
  const auto ref = aggregate_subword_vectors(many);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(many.begin(), many.end(), rng);
    CHECK(aggregate_subword_vectors(many) == ref);
  }
}

TEST_CASE("embedding table parse, lookup miss and round-trip") {
  std::istringstream in("2 3\ncat 0.1 0.2 0.3\ndog -1 0 1e-3\n");
  const auto table = parse_embeddings(in, "emb.txt");
  CHECK(table.size() == 2);
  CHECK(table.dim() == 3);
  REQUIRE(table.lookup("dog").has_value());
  CHECK((*table.lookup("dog"))[2] == 1e-3);
  CHECK_FALSE(table.lookup("bird").has_value());

  std::ostringstream out;
  write_embeddings(out, table);
  std::istringstream back(out.str());
  const auto again = parse_embeddings(back, "emb.txt");
  CHECK(again.words() == table.words());
  CHECK(std::equal(again.matrix().begin(), again.matrix().end(), table.matrix().begin()));

  std::istringstream short_row("1 3\ncat 0.1 0.2\n");
  try {
    parse_embeddings(short_row, "emb.txt");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream bad_count("3 1\na 1\nb 2\n");
  CHECK_THROWS_AS(parse_embeddings(bad_count, "emb.txt"), DataError);
  EmbeddingTable t(2);
  CHECK_THROWS_AS(t.add("x", std::vector<double>{1, 2, 3}), DimensionError);
}

TEST_CASE("resolve_word_vectors drops words missing from the table") {
  EmbeddingTable table(2);
  table.add("cat", std::vector<double>{1, 2});
  std::vector<DictEntry> entries{entry("cat", "feline", {}), entry("dog", "canine", {}),
                                 entry("owl", "bird", {5, 6})};
  const auto r = resolve_word_vectors(entries, &table);
  CHECK(r.dropped == 1);
  REQUIRE(r.entries.size() == 2);
  CHECK(r.entries[0].word_vector == std::vector<double>{1, 2});
  CHECK(r.entries[1].word == "owl");
}

TEST_CASE("whitespace vocabulary") {
  const std::vector<std::string> corpus{"a b", "b c"};
  const auto v = build_whitespace_vocab(corpus);
  CHECK(v.size() == 7);
  CHECK(v.id("a") == 4);
  CHECK(v.id("b") == 5);
  CHECK(v.id("c") == 6);
  CHECK(build_whitespace_vocab(std::vector<std::string>{}).size() == kNumSpecials);
  CHECK(build_whitespace_vocab(corpus) == v);
  const std::vector<std::string> reordered{"b c", "a b"};
  CHECK(build_whitespace_vocab(reordered) == v);

  CHECK(v.decode(v.encode("a b")) == "a b");
  const auto ids = v.encode("a zebra");
  CHECK(ids == std::vector<TokenId>{4, kUnk});
  const std::vector<TokenId> framed{kBos, 4, 6, kEos, kPad};
  CHECK(v.decode(framed) == "a c");
}

TEST_CASE("special ids are distinct and below regular ids") {
  const std::set<TokenId> specials{kPad, kBos, kEos, kUnk};
  CHECK(specials.size() == kNumSpecials);
  CHECK(*specials.rbegin() < static_cast<TokenId>(kNumSpecials));
}

TEST_CASE("vocabulary serialization round-trips and hashes stably") {
  const std::vector<std::string> corpus{"the cat sat", "on the mat"};
  const auto ws = build_whitespace_vocab(corpus);
  CHECK(Vocabulary::deserialize(ws.serialize()) == ws);
  CHECK(Vocabulary::deserialize(ws.serialize()).hash() == ws.hash());

  const auto uni = train_unigram_vocab(corpus, unigram_min_size(corpus) + 6);
  const auto back = Vocabulary::deserialize(uni.serialize());
  CHECK(back == uni);
  CHECK(back.hash() == uni.hash());
  CHECK(back.hash() != ws.hash());

  CHECK_THROWS_AS(Vocabulary::deserialize("something else\n"), DataError);
  std::string truncated = uni.serialize();
  truncated.resize(truncated.size() / 2);
  truncated.resize(truncated.rfind('\n') + 1);
  CHECK_THROWS_AS(Vocabulary::deserialize(truncated), DataError);
}

TEST_CASE("unigram segmentation matches exhaustive search") {
  const std::string m(kWordBoundary);
  const std::vector<std::string> pieces{"a", "b", "c", m, "ab", "bc", "abc", "ca", m + "a", "bb", "cab", m + "ab"};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lp(-6.0, -0.5);
  for (int inventory = 0; inventory < 5; ++inventory) {
    std::vector<double> log_probs(pieces.size());
    std::map<std::string, double> table;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      log_probs[i] = lp(rng);
      table[pieces[i]] = log_probs[i];
    }
    const Vocabulary v(VocabKind::unigram, pieces, log_probs);
    const char alphabet[] = {'a', 'b', 'c', 'd'};
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t len = 1 + rng() % 9;  // plus the boundary marker: at most 10 characters
      std::string word = m;
      for (std::size_t i = 0; i < len; ++i) word += alphabet[rng() % 4];
      CAPTURE(word);
      const auto ids = v.segment_word(word);
      std::string rebuilt;
      for (TokenId t : ids) rebuilt += t == kUnk ? "d" : v.token(t);
      CHECK(rebuilt == word);
      CHECK(v.segmentation_score(ids) == doctest::Approx(neurodict::oracles::exhaustive_segmentation(utf8_chars(word), table, v.unknown_score())).epsilon(1e-12));
    }
  }
}

TEST_CASE("unigram training keeps a frequent word and every character") {
  std::vector<std::string> corpus(30, "banana");
  corpus.push_back("band nab");
  const auto v = train_unigram_vocab(corpus, 60);
  CHECK(v.size() <= 60);
  CHECK(v.contains(std::string(kWordBoundary) + "banana"));
  for (const char* c : {"b", "a", "n", "d", "\xE2\x96\x81"}) CHECK(v.contains(c));
  CHECK(v.encode("banana") == std::vector<TokenId>{v.id(std::string(kWordBoundary) + "banana")});
}

TEST_CASE("unigram training at the size floor gives a character vocabulary") {
  const std::vector<std::string> corpus{"the cat sat on the mat", "a dog ran", "caf\xC3\xA9 au lait"};
  const std::size_t floor = unigram_min_size(corpus);
  const auto v = train_unigram_vocab(corpus, floor);
  CHECK(v.size() == floor);
  for (const auto& p : v.pieces()) CHECK(utf8_chars(p).size() == 1);
  CHECK_THROWS_AS(train_unigram_vocab(corpus, floor - 1), UsageError);
}

TEST_CASE("unigram vocabulary encodes every training string without UNK") {
  const std::vector<std::string> corpus{"the quick brown fox", "jumps over the lazy dog", "the dog sleeps",
                                        "na\xC3\xAFve caf\xC3\xA9"};
  for (std::size_t extra : {0, 5, 20}) {
    const auto v = train_unigram_vocab(corpus, unigram_min_size(corpus) + extra);
    for (const auto& s : corpus) {
      const auto ids = v.encode(s);
      CHECK(std::find(ids.begin(), ids.end(), kUnk) == ids.end());
      CHECK(v.decode(ids) == s);
    }
  }
}

TEST_CASE("encode-decode-encode is idempotent") {
  const std::vector<std::string> corpus{"a small domesticated feline", "to move at speed", "the colour of grass"};
  const auto ws = build_whitespace_vocab(corpus);
  const auto uni = train_unigram_vocab(corpus, unigram_min_size(corpus) + 10);
  const std::vector<std::string> probes{"a small feline", "unknown zebra words", "  spaced   out  ", "x\xC3\xA9y q",
                                        "grass colour of the speed"};
  for (const auto* v : {&ws, &uni}) {
    for (const auto& p : probes) {
      CAPTURE(p);
      const auto once = v->encode(p);
      CHECK(v->encode(v->decode(once)) == once);
    }
  }
}

TEST_CASE("batches: sizes, framing, masks and coverage") {
  std::vector<DictEntry> entries;
  for (int i = 0; i < 5; ++i) {
    std::string def;
    for (int j = 0; j <= i; ++j) def += "w" + std::to_string(j) + " ";
    entries.push_back(entry("word" + std::to_string(i), def, {double(i), 1.0}));
  }
  std::vector<std::string> defs;
  for (const auto& e : entries) defs.push_back(definition_text(e));
  const auto vocab = build_whitespace_vocab(defs);

  const auto batches = make_batches(entries, vocab, 2, 42);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].size == 2);
  CHECK(batches[1].size == 2);
  CHECK(batches[2].size == 1);

  std::multiset<std::size_t> seen;
  for (const auto& b : batches) {
    seen.insert(b.entry_indices.begin(), b.entry_indices.end());
    double mask_sum = 0.0, expected = 0.0;
    for (double m : b.mask) mask_sum += m;
    for (std::size_t r = 0; r < b.size; ++r) {
      const auto& e = entries[b.entry_indices[r]];
      expected += static_cast<double>(e.definition.size() + 2);
      CHECK(b.token_ids[r * b.seq_len] == kBos);
      CHECK(b.token_ids[r * b.seq_len + e.definition.size() + 1] == kEos);
      CHECK(b.word_vectors.at(r, 0) == e.word_vector[0]);
      for (std::size_t j = 0; j + 1 < b.seq_len; ++j) {
        CHECK(b.decoder_targets[r * b.decoder_len() + j] == b.token_ids[r * b.seq_len + j + 1]);
        CHECK(b.decoder_input[r * b.decoder_len() + j] == b.token_ids[r * b.seq_len + j]);
      }
    }
    CHECK(mask_sum == expected);
  }
  CHECK(seen == std::multiset<std::size_t>{0, 1, 2, 3, 4});

  const auto again = make_batches(entries, vocab, 2, 42);
  for (std::size_t i = 0; i < batches.size(); ++i) CHECK(again[i].entry_indices == batches[i].entry_indices);

  const auto ordered = make_batches(entries, vocab, 4, std::nullopt);
  CHECK(ordered[0].entry_indices == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK_THROWS_AS(make_batches(entries, vocab, 0, 1), UsageError);
}

TEST_CASE("batch coverage holds across seeds and sizes") {
  std::vector<DictEntry> entries;
  for (int i = 0; i < 23; ++i) entries.push_back(entry("w" + std::to_string(i), "x y", {1.0}));
  const auto vocab = build_whitespace_vocab(std::vector<std::string>{"x y"});
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    for (std::size_t bs : {1, 4, 7, 23, 50}) {
      std::vector<std::size_t> all;
      for (const auto& b : make_batches(entries, vocab, bs, seed)) all.insert(all.end(), b.entry_indices.begin(), b.entry_indices.end());
      std::sort(all.begin(), all.end());
      REQUIRE(all.size() == 23);
      for (std::size_t i = 0; i < 23; ++i) CHECK(all[i] == i);
    }
  }
}
