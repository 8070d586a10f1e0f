// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#include "neurodict/data/vocab.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "neurodict/data/dataset.hpp"
#include "neurodict/errors.hpp"

namespace neurodict::data {
namespace {

constexpr std::string_view kMagic = "neurodict-vocab";
constexpr int kFormatVersion = 1;
const std::string kSpecialNames[kNumSpecials] = {"<pad>", "<s>", "</s>", "<unk>"};
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

// --- unigram training state ------------------------------------------------

struct TrainPiece {
  std::string text;
  bool is_char = false;
  double log_prob = 0.0;
};

struct TrainWord {
  std::vector<std::string> chars;
  double count = 0.0;
};

struct Edge {
  std::size_t start;
  std::size_t end;
  std::size_t piece;
};

class UnigramTrainer {
 public:
  UnigramTrainer(std::vector<TrainWord> words, std::vector<TrainPiece> pieces, std::size_t max_chars)
      : words_(std::move(words)), pieces_(std::move(pieces)), max_chars_(max_chars) {
    reindex();
  }

  std::size_t size() const { return pieces_.size(); }
  const std::vector<TrainPiece>& pieces() const { return pieces_; }

  void em_iteration() {
    std::vector<double> expected(pieces_.size(), 0.0);
    for (const TrainWord& w : words_) {
      const auto edges = lattice(w.chars, std::numeric_limits<std::size_t>::max());
      const std::size_t n = w.chars.size();
      std::vector<double> alpha(n + 1, kNegInf), beta(n + 1, kNegInf);
      alpha[0] = 0.0;
      // Edges are ordered by end position, so one forward sweep suffices.
      for (const Edge& e : edges) alpha[e.end] = log_add(alpha[e.end], alpha[e.start] + pieces_[e.piece].log_prob);
      beta[n] = 0.0;
      for (auto it = edges.rbegin(); it != edges.rend(); ++it) {
        beta[it->start] = log_add(beta[it->start], pieces_[it->piece].log_prob + beta[it->end]);
      }
      const double z = alpha[n];
      for (const Edge& e : edges) {
        expected[e.piece] += w.count * std::exp(alpha[e.start] + pieces_[e.piece].log_prob + beta[e.end] - z);
      }
    }
    constexpr double kMinCount = 1e-6;
    double total = 0.0;
    for (double& c : expected) {
      c = std::max(c, kMinCount);
      total += c;
    }
    for (std::size_t i = 0; i < pieces_.size(); ++i) pieces_[i].log_prob = std::log(expected[i] / total);
  }

  // Removes up to `count` non-character pieces whose removal costs the least
  // corpus likelihood.
  void prune(std::size_t count) {
    std::vector<double> freq(pieces_.size(), 0.0);
    for (const TrainWord& w : words_) {
      for (std::size_t p : viterbi(w.chars, std::numeric_limits<std::size_t>::max())) freq[p] += w.count;
    }
    double total = 0.0;
    for (double f : freq) total += f;

    std::vector<std::pair<double, std::size_t>> candidates;
    for (std::size_t p = 0; p < pieces_.size(); ++p) {
      if (pieces_[p].is_char) continue;
      double loss = 0.0;
      if (freq[p] > 0.0) {
        const auto alt = viterbi(utf8_chars(pieces_[p].text), p);
        const double total_alt = total + freq[p] * (static_cast<double>(alt.size()) - 1.0);
        const double logprob_p = std::log(freq[p]) - std::log(total);
        double logprob_alt = 0.0;
        for (std::size_t a : alt) logprob_alt += std::log(freq[a] + freq[p]) - std::log(total_alt);
        loss = freq[p] * (logprob_p - logprob_alt);
      }
      candidates.emplace_back(loss, p);
    }
    std::sort(candidates.begin(), candidates.end(), [this](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return pieces_[a.second].text < pieces_[b.second].text;
    });
    count = std::min(count, candidates.size());
    std::vector<bool> drop(pieces_.size(), false);
    for (std::size_t i = 0; i < count; ++i) drop[candidates[i].second] = true;
    std::vector<TrainPiece> kept;
    for (std::size_t p = 0; p < pieces_.size(); ++p)
      if (!drop[p]) kept.push_back(std::move(pieces_[p]));
    pieces_ = std::move(kept);
    reindex();
  }

  std::size_t prunable() const {
    return static_cast<std::size_t>(
        std::count_if(pieces_.begin(), pieces_.end(), [](const TrainPiece& p) { return !p.is_char; }));
  }

 private:
  void reindex() {
    index_.clear();
    for (std::size_t i = 0; i < pieces_.size(); ++i) index_.emplace(pieces_[i].text, i);
  }

  // All piece occurrences in `chars`, ordered by end position.
  std::vector<Edge> lattice(const std::vector<std::string>& chars, std::size_t excluded) const {
    std::vector<Edge> edges;
    for (std::size_t end = 1; end <= chars.size(); ++end) {
      std::string piece;
      for (std::size_t len = 1; len <= std::min(max_chars_, end); ++len) {
        const std::size_t start = end - len;
        piece.insert(0, chars[start]);
        const auto it = index_.find(piece);
        if (it != index_.end() && it->second != excluded) edges.push_back({start, end, it->second});
      }
    }
    return edges;
  }

  std::vector<std::size_t> viterbi(const std::vector<std::string>& chars, std::size_t excluded) const {
    const std::size_t n = chars.size();
    std::vector<double> best(n + 1, kNegInf);
    std::vector<Edge> back(n + 1, Edge{0, 0, 0});
    best[0] = 0.0;
    for (const Edge& e : lattice(chars, excluded)) {
      const double cand = best[e.start] + pieces_[e.piece].log_prob;
      if (cand > best[e.end]) {
        best[e.end] = cand;
        back[e.end] = e;
      }
    }
    std::vector<std::size_t> out;
    for (std::size_t pos = n; pos > 0; pos = back[pos].start) out.push_back(back[pos].piece);
    std::reverse(out.begin(), out.end());
    return out;
  }

  std::vector<TrainWord> words_;
  std::vector<TrainPiece> pieces_;
  std::size_t max_chars_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::map<std::string, double> count_marked_words(std::span<const std::string> corpus) {
  std::map<std::string, double> counts;
  for (const std::string& text : corpus)
    for (const std::string& tok : split_whitespace(text)) counts[std::string(kWordBoundary) + tok] += 1.0;
  return counts;
}

}  // namespace

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = utf8_length(static_cast<unsigned char>(text[i]));
    if (i + len > text.size()) len = 1;
    for (std::size_t j = 1; j < len; ++j) {
      if ((static_cast<unsigned char>(text[i + j]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string_view vocab_kind_name(VocabKind kind) { return kind == VocabKind::unigram ? "unigram" : "whitespace"; }

VocabKind parse_vocab_kind(std::string_view name) {
  if (name == "whitespace") return VocabKind::whitespace;
  if (name == "unigram") return VocabKind::unigram;
  throw UsageError("unknown vocabulary kind '" + std::string(name) + "' (expected whitespace or unigram)");
}

Vocabulary::Vocabulary(VocabKind kind, std::vector<std::string> pieces, std::vector<double> log_probs)
    : kind_(kind), pieces_(std::move(pieces)), log_probs_(std::move(log_probs)) {
  if (kind_ == VocabKind::unigram && log_probs_.size() != pieces_.size()) {
    throw DataError("unigram vocabulary needs one log-probability per piece");
  }
  if (kind_ == VocabKind::whitespace) log_probs_.clear();
  rebuild_index();
}

void Vocabulary::rebuild_index() {
  index_.clear();
  max_piece_chars_ = 0;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (pieces_[i].empty()) throw DataError("vocabulary contains an empty piece");
    if (!index_.emplace(pieces_[i], static_cast<TokenId>(kNumSpecials + i)).second) {
      throw DataError("vocabulary contains duplicate piece '" + pieces_[i] + "'");
    }
    max_piece_chars_ = std::max(max_piece_chars_, utf8_chars(pieces_[i]).size());
  }
  unk_score_ = 0.0;
  if (!log_probs_.empty()) unk_score_ = *std::min_element(log_probs_.begin(), log_probs_.end()) - 10.0;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= size()) {
    throw DimensionError("token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(size()));
  }
  if (static_cast<std::size_t>(id) < kNumSpecials) return kSpecialNames[id];
  return pieces_[static_cast<std::size_t>(id) - kNumSpecials];
}

TokenId Vocabulary::id(std::string_view piece) const {
  const auto it = index_.find(std::string(piece));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view piece) const { return index_.count(std::string(piece)) != 0; }

double Vocabulary::log_prob(TokenId id) const {
  if (id == kUnk) return unk_score_;
  if (log_probs_.empty() || id < static_cast<TokenId>(kNumSpecials)) return 0.0;
  return log_probs_.at(static_cast<std::size_t>(id) - kNumSpecials);
}

std::vector<TokenId> Vocabulary::segment_word(std::string_view marked_word) const {
  if (kind_ == VocabKind::whitespace) return {id(marked_word)};
  const auto chars = utf8_chars(marked_word);
  const std::size_t n = chars.size();
  std::vector<double> best(n + 1, kNegInf);
  std::vector<std::pair<std::size_t, TokenId>> back(n + 1, {0, kUnk});
  best[0] = 0.0;
  for (std::size_t end = 1; end <= n; ++end) {
    std::string piece;
    for (std::size_t len = 1; len <= std::max<std::size_t>(1, std::min(max_piece_chars_, end)); ++len) {
      const std::size_t start = end - len;
      piece.insert(0, chars[start]);
      if (best[start] == kNegInf) continue;
      const auto it = index_.find(piece);
      double score;
      TokenId tok;
      if (it != index_.end()) {
        tok = it->second;
        score = log_probs_[static_cast<std::size_t>(tok) - kNumSpecials];
      } else if (len == 1) {
        tok = kUnk;
        score = unk_score_;
      } else {
        continue;
      }
      if (best[start] + score > best[end]) {
        best[end] = best[start] + score;
        back[end] = {start, tok};
      }
    }
  }
  std::vector<TokenId> out;
  for (std::size_t pos = n; pos > 0; pos = back[pos].first) out.push_back(back[pos].second);
  std::reverse(out.begin(), out.end());
  return out;
}

double Vocabulary::segmentation_score(std::span<const TokenId> ids) const {
  double total = 0.0;
  for (TokenId t : ids) total += log_prob(t);
  return total;
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> out;
  for (const std::string& word : split_whitespace(text)) {
    if (kind_ == VocabKind::whitespace) {
      out.push_back(id(word));
    } else {
      const auto ids = segment_word(std::string(kWordBoundary) + word);
      out.insert(out.end(), ids.begin(), ids.end());
    }
  }
  return out;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  if (kind_ == VocabKind::whitespace) {
    for (TokenId t : ids) {
      if (t == kPad || t == kBos || t == kEos) continue;
      if (!out.empty()) out += ' ';
      out += token(t);
    }
    return out;
  }
  std::string joined;
  for (TokenId t : ids) {
    if (t == kPad || t == kBos || t == kEos) continue;
    joined += t == kUnk ? std::string(kUnigramUnkSurface) : token(t);
  }
  std::size_t pos = 0;
  while ((pos = joined.find(kWordBoundary, pos)) != std::string::npos) {
    joined.replace(pos, kWordBoundary.size(), " ");
    pos += 1;
  }
  const std::size_t first = joined.find_first_not_of(' ');
  return first == std::string::npos ? std::string() : joined.substr(first);
}

std::string Vocabulary::serialize() const {
  std::ostringstream out;
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "kind " << vocab_kind_name(kind_) << '\n';
  out << "specials";
  for (const auto& s : kSpecialNames) out << ' ' << s;
  out << '\n';
  out << "size " << pieces_.size() << '\n';
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    out << pieces_[i] << '\t' << format_double(log_probs_.empty() ? 0.0 : log_probs_[i]) << '\n';
  }
  return out.str();
}

Vocabulary Vocabulary::deserialize(std::string_view text, const std::string& source_name) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() {
    if (!std::getline(in, line)) throw DataError(source_name, lineno + 1, "unexpected end of vocabulary file");
    ++lineno;
    return split_whitespace(line);
  };
  auto f = next();
  if (f.size() != 2 || f[0] != kMagic) throw DataError(source_name, lineno, "not a neurodict vocabulary file");
  if (f[1] != std::to_string(kFormatVersion)) {
    throw DataError(source_name, lineno, "unsupported vocabulary version " + f[1]);
  }
  f = next();
  if (f.size() != 2 || f[0] != "kind") throw DataError(source_name, lineno, "expected 'kind <name>'");
  VocabKind kind;
  try {
    kind = parse_vocab_kind(f[1]);
  } catch (const UsageError& e) {
    throw DataError(source_name, lineno, e.what());
  }
  f = next();
  if (f.size() != kNumSpecials + 1 || f[0] != "specials" ||
      !std::equal(f.begin() + 1, f.end(), std::begin(kSpecialNames))) {
    throw DataError(source_name, lineno, "special token line does not match this build");
  }
  f = next();
  std::size_t count = 0;
  if (f.size() != 2 || f[0] != "size" ||
      std::from_chars(f[1].data(), f[1].data() + f[1].size(), count).ec != std::errc()) {
    throw DataError(source_name, lineno, "expected 'size <n>'");
  }
  std::vector<std::string> pieces;
  std::vector<double> log_probs;
  for (std::size_t i = 0; i < count; ++i) {
    next();
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) throw DataError(source_name, lineno, "expected '<piece>\\t<logprob>'");
    const std::string num = line.substr(tab + 1);
    double lp = 0.0;
    const auto res = std::from_chars(num.data(), num.data() + num.size(), lp);
    if (res.ec != std::errc() || res.ptr != num.data() + num.size()) {
      throw DataError(source_name, lineno, "invalid log-probability '" + num + "'");
    }
    pieces.push_back(line.substr(0, tab));
    log_probs.push_back(lp);
  }
  try {
    return Vocabulary(kind, std::move(pieces), kind == VocabKind::unigram ? std::move(log_probs) : std::vector<double>{});
  } catch (const DataError& e) {
    throw DataError(source_name, lineno, e.what());
  }
}

std::uint64_t Vocabulary::hash() const { return fnv1a64(serialize()); }

Vocabulary build_whitespace_vocab(std::span<const std::string> definitions) {
  std::set<std::string> tokens;
  for (const std::string& d : definitions)
    for (std::string& tok : split_whitespace(d)) tokens.insert(std::move(tok));
  return Vocabulary(VocabKind::whitespace, std::vector<std::string>(tokens.begin(), tokens.end()));
}

std::size_t unigram_min_size(std::span<const std::string> corpus) {
  std::set<std::string> chars;
  chars.insert(std::string(kWordBoundary));
  for (const auto& [word, _] : count_marked_words(corpus))
    for (std::string& c : utf8_chars(word)) chars.insert(std::move(c));
  return chars.size() + kNumSpecials;
}

Vocabulary train_unigram_vocab(std::span<const std::string> corpus, std::size_t target_size,
                               const UnigramOptions& options) {
  const std::size_t min_size = unigram_min_size(corpus);
  if (target_size < min_size) {
    throw UsageError("unigram vocabulary size " + std::to_string(target_size) +
                     " is below the character floor of " + std::to_string(min_size));
  }
  if (options.max_piece_chars < 1 || options.em_iterations_per_round < 1 || !(options.prune_fraction > 0.0)) {
    throw UsageError("invalid unigram training options");
  }

  const auto word_counts = count_marked_words(corpus);
  std::vector<TrainWord> words;
  std::map<std::string, double> char_freq;
  std::map<std::string, double> substring_freq;
  char_freq[std::string(kWordBoundary)] += 0.0;
  for (const auto& [word, count] : word_counts) {
    TrainWord w{utf8_chars(word), count};
    for (const auto& c : w.chars) char_freq[c] += count;
    for (std::size_t start = 0; start < w.chars.size(); ++start) {
      std::string piece = w.chars[start];
      for (std::size_t end = start + 2; end <= std::min(w.chars.size(), start + options.max_piece_chars); ++end) {
        piece += w.chars[end - 1];
        substring_freq[piece] += count;
      }
    }
    words.push_back(std::move(w));
  }

  std::vector<std::pair<std::string, double>> seeds(substring_freq.begin(), substring_freq.end());
  std::stable_sort(seeds.begin(), seeds.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (seeds.size() > options.max_seed_pieces) seeds.resize(options.max_seed_pieces);

  std::vector<TrainPiece> pieces;
  double total = 0.0;
  for (const auto& [c, f] : char_freq) total += std::max(f, 1.0);
  for (const auto& [s, f] : seeds) total += f;
  for (const auto& [c, f] : char_freq) pieces.push_back({c, true, std::log(std::max(f, 1.0) / total)});
  for (const auto& [s, f] : seeds) pieces.push_back({s, false, std::log(f / total)});

  UnigramTrainer trainer(std::move(words), std::move(pieces), options.max_piece_chars);
  for (std::size_t i = 0; i < options.em_iterations_per_round; ++i) trainer.em_iteration();
  while (trainer.size() + kNumSpecials > target_size) {
    const std::size_t excess = trainer.size() + kNumSpecials - target_size;
    const auto by_fraction =
        std::max<std::size_t>(1, static_cast<std::size_t>(options.prune_fraction * static_cast<double>(trainer.prunable())));
    trainer.prune(std::min(excess, by_fraction));
    for (std::size_t i = 0; i < options.em_iterations_per_round; ++i) trainer.em_iteration();
  }

  auto final_pieces = trainer.pieces();
  std::sort(final_pieces.begin(), final_pieces.end(), [](const TrainPiece& a, const TrainPiece& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.text < b.text;
  });
  std::vector<std::string> texts;
  std::vector<double> log_probs;
  for (auto& p : final_pieces) {
    texts.push_back(std::move(p.text));
    log_probs.push_back(p.log_prob);
  }
  return Vocabulary(VocabKind::unigram, std::move(texts), std::move(log_probs));
}

void save_vocab(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary '" + path.string() + "'");
  out << vocab.serialize();
}

Vocabulary load_vocab(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocabulary '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return Vocabulary::deserialize(buf.str(), path.string());
}

}  // namespace neurodict::data
