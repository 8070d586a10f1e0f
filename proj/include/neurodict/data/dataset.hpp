// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace neurodict::data {

class EmbeddingTable;

/// One dictionary record. After resolve_word_vectors() every entry carries a
/// word_vector of the corpus dimension.
struct DictEntry {
  std::string word;
  std::vector<std::string> definition;
  std::vector<double> word_vector;
  std::optional<std::vector<std::vector<double>>> context_subword_vectors;

  bool operator==(const DictEntry&) const = default;
};

struct DatasetOptions {
  /// Expected vector dimension. When absent, the first vector seen fixes it.
  std::optional<std::size_t> dim;
  bool lowercase = false;
};

/// Parses line-delimited JSON records:
///
///   {"word": "cat", "definition": "a small feline",
///    "word_vector": [0.1, ...], "context_subword_vectors": [[...], ...]}
///
/// `definition` may also be an array of tokens. Both vector fields are
/// optional; when only subword vectors are given their sum becomes the word
/// vector. Blank lines are skipped. Errors are DataError with the line number.
std::vector<DictEntry> load_dataset(const std::filesystem::path& path, const DatasetOptions& options = {});
std::vector<DictEntry> parse_dataset(std::istream& in, const std::string& source_name,
                                     const DatasetOptions& options = {});

void write_dataset(std::ostream& out, std::span<const DictEntry> entries);

/// Elementwise sum of sub-word vectors. Throws DataError on an empty list and
/// DimensionError on ragged input.
std::vector<double> aggregate_subword_vectors(std::span<const std::vector<double>> vectors);

struct ResolvedEntries {
  std::vector<DictEntry> entries;
  std::size_t dropped = 0;
};

/// Fills missing word vectors from the table. Entries that remain without a
/// vector are dropped and counted; entries whose vector disagrees with the
/// table dimension raise DimensionError.
ResolvedEntries resolve_word_vectors(std::vector<DictEntry> entries, const EmbeddingTable* table);

std::string definition_text(const DictEntry& entry);

/// Splits on space, tab, CR and LF.
std::vector<std::string> split_whitespace(std::string_view text);

}  // namespace neurodict::data
