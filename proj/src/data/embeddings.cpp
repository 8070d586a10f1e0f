// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#include "neurodict/data/embeddings.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "neurodict/data/dataset.hpp"
#include "neurodict/errors.hpp"

namespace neurodict::data {

void EmbeddingTable::add(const std::string& word, std::span<const double> vector) {
  if (words_.empty() && dim_ == 0) dim_ = vector.size();
  if (vector.size() != dim_) {
    throw DimensionError("vector for '" + word + "' has dimension " + std::to_string(vector.size()) +
                         ", table is " + std::to_string(dim_));
  }
  if (!index_.emplace(word, words_.size()).second) throw DataError("duplicate embedding for '" + word + "'");
  words_.push_back(word);
  matrix_.insert(matrix_.end(), vector.begin(), vector.end());
}

std::optional<std::span<const double>> EmbeddingTable::lookup(const std::string& word) const {
  const auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return row(it->second);
}

EmbeddingTable parse_embeddings(std::istream& in, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source_name, 1, "missing 'count dim' header");
  const auto header = split_whitespace(line);
  std::size_t count = 0, dim = 0;
  auto parse_size = [&](const std::string& s, std::size_t& out) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
  };
  if (header.size() != 2 || !parse_size(header[0], count) || !parse_size(header[1], dim) || dim == 0) {
    throw DataError(source_name, 1, "header must be 'count dim' with positive dim");
  }

  EmbeddingTable table(dim);
  std::vector<double> vec(dim);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    if (fields.size() != dim + 1) {
      throw DataError(source_name, lineno,
                      "expected a word and " + std::to_string(dim) + " values, got " + std::to_string(fields.size()) +
                          " fields");
    }
    for (std::size_t i = 0; i < dim; ++i) {
      const std::string& f = fields[i + 1];
      char* end = nullptr;
      vec[i] = std::strtod(f.c_str(), &end);
      if (end != f.c_str() + f.size() || !std::isfinite(vec[i])) {
        throw DataError(source_name, lineno, "invalid number '" + f + "'");
      }
    }
    try {
      table.add(fields[0], vec);
    } catch (const DataError& e) {
      throw DataError(source_name, lineno, e.what());
    }
  }
  if (table.size() != count) {
    throw DataError(source_name, lineno,
                    "header declares " + std::to_string(count) + " words, found " + std::to_string(table.size()));
  }
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file '" + path.string() + "'");
  return parse_embeddings(in, path.string());
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  out << table.size() << ' ' << table.dim() << '\n';
  char buf[32];
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.word(i);
    for (double v : table.row(i)) {
      const auto res = std::to_chars(buf, buf + sizeof buf, v);
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write embedding file '" + path.string() + "'");
  write_embeddings(out, table);
}

}  // namespace neurodict::data
