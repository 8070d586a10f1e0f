// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "neurodict/numerics/ops.hpp"

namespace neurodict::data {

using numerics::TokenId;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr std::size_t kNumSpecials = 4;

enum class VocabKind { whitespace, unigram };

std::string_view vocab_kind_name(VocabKind kind);
VocabKind parse_vocab_kind(std::string_view name);

/// Word-boundary marker prepended to every word by the unigram model.
inline constexpr std::string_view kWordBoundary = "\xE2\x96\x81";  // U+2581
/// Surface form of UNK when decoding unigram ids.
inline constexpr std::string_view kUnigramUnkSurface = "\xE2\x81\x87";  // U+2047

/// Token inventory. Ids 0..3 are PAD, BOS, EOS and UNK; regular entries start
/// at 4. The unigram kind carries one log-probability per regular piece.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(VocabKind kind, std::vector<std::string> pieces, std::vector<double> log_probs = {});

  VocabKind kind() const { return kind_; }
  std::size_t size() const { return kNumSpecials + pieces_.size(); }

  /// Text for any id, including the special placeholders.
  const std::string& token(TokenId id) const;
  /// Regular-piece lookup; returns kUnk for an unknown string.
  TokenId id(std::string_view piece) const;
  bool contains(std::string_view piece) const;

  const std::vector<std::string>& pieces() const { return pieces_; }
  /// Empty for the whitespace kind.
  const std::vector<double>& log_probs() const { return log_probs_; }
  double log_prob(TokenId id) const;

  /// Whitespace kind: split + UNK for unknown tokens (special placeholders
  /// map to their ids). Unigram kind: max-probability segmentation of each
  /// word, one UNK per unknown character. No BOS/EOS framing.
  std::vector<TokenId> encode(std::string_view text) const;

  /// Drops PAD, BOS and EOS; renders UNK as "<unk>" (whitespace) or U+2047
  /// (unigram).
  std::string decode(std::span<const TokenId> ids) const;

  /// Versioned text form; the basis of hash().
  std::string serialize() const;
  static Vocabulary deserialize(std::string_view text, const std::string& source_name = "vocab");

  /// FNV-1a 64 of serialize().
  std::uint64_t hash() const;

  bool operator==(const Vocabulary& other) const {
    return kind_ == other.kind_ && pieces_ == other.pieces_ && log_probs_ == other.log_probs_;
  }

  /// Max-probability segmentation of one boundary-marked word into piece ids.
  /// Unknown characters become kUnk. Exposed for tests.
  std::vector<TokenId> segment_word(std::string_view marked_word) const;

  /// Total log-probability the unigram model assigns to a segmentation.
  double segmentation_score(std::span<const TokenId> ids) const;

  /// Score used for an unknown character inside segmentation.
  double unknown_score() const { return unk_score_; }

 private:
  void rebuild_index();

  VocabKind kind_ = VocabKind::whitespace;
  std::vector<std::string> pieces_;
  std::vector<double> log_probs_;
  std::unordered_map<std::string, TokenId> index_;
  std::size_t max_piece_chars_ = 0;
  double unk_score_ = 0.0;
};

/// One id per distinct whitespace token, ids assigned in lexicographic order.
Vocabulary build_whitespace_vocab(std::span<const std::string> definitions);

struct UnigramOptions {
  std::size_t max_piece_chars = 16;
  std::size_t em_iterations_per_round = 4;
  double prune_fraction = 0.2;
  std::size_t max_seed_pieces = 200000;
};

/// Number of ids a unigram vocabulary needs to cover every character of the
/// corpus (distinct code points plus the boundary marker plus specials).
std::size_t unigram_min_size(std::span<const std::string> corpus);

/// Unigram language model trained by EM over forward-backward expected counts,
/// pruning the least loss-critical pieces each round until the vocabulary
/// (specials included) has at most target_size ids. Single characters are
/// never pruned. Throws UsageError when target_size < unigram_min_size().
Vocabulary train_unigram_vocab(std::span<const std::string> corpus, std::size_t target_size,
                               const UnigramOptions& options = {});

void save_vocab(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary load_vocab(const std::filesystem::path& path);

/// Splits UTF-8 into code points (invalid bytes become single-byte units).
std::vector<std::string> utf8_chars(std::string_view text);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace neurodict::data
