// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace neurodict::data {

/// Word -> vector map stored as one contiguous row-major matrix, in insertion
/// order. Lookups of absent words return std::nullopt.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }

  /// Throws DimensionError on a wrong-length vector and DataError on a
  /// duplicate word.
  void add(const std::string& word, std::span<const double> vector);

  std::optional<std::span<const double>> lookup(const std::string& word) const;
  bool contains(const std::string& word) const { return index_.count(word) != 0; }

  const std::string& word(std::size_t i) const { return words_[i]; }
  std::span<const double> row(std::size_t i) const { return {matrix_.data() + i * dim_, dim_}; }
  std::span<const double> matrix() const { return matrix_; }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::size_t dim_;
  std::vector<std::string> words_;
  std::vector<double> matrix_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Text format: a "count dim" header line, then "word v1 ... vdim" lines.
EmbeddingTable load_embeddings(const std::filesystem::path& path);
EmbeddingTable parse_embeddings(std::istream& in, const std::string& source_name);
void write_embeddings(std::ostream& out, const EmbeddingTable& table);
void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);

}  // namespace neurodict::data
