// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#include "neurodict/data/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "neurodict/data/embeddings.hpp"
#include "neurodict/errors.hpp"

namespace neurodict::data {
namespace {

using nlohmann::json;

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

std::vector<double> parse_vector(const json& value, const std::string& field, const std::string& source,
                                 std::size_t line) {
  if (!value.is_array()) throw DataError(source, line, "field '" + field + "' must be an array of numbers");
  std::vector<double> out;
  out.reserve(value.size());
  for (const json& x : value) {
    if (!x.is_number()) throw DataError(source, line, "field '" + field + "' contains a non-number");
    const double v = x.get<double>();
    if (!std::isfinite(v)) throw DataError(source, line, "field '" + field + "' contains a non-finite value");
    out.push_back(v);
  }
  if (out.empty()) throw DataError(source, line, "field '" + field + "' is empty");
  return out;
}

void check_dim(std::optional<std::size_t>& dim, std::size_t got, const std::string& field, const std::string& source,
               std::size_t line) {
  if (!dim) {
    dim = got;
    return;
  }
  if (*dim != got) {
    throw DataError(source, line,
                    "field '" + field + "' has dimension " + std::to_string(got) + ", expected " + std::to_string(*dim));
  }
}

std::string lower_ascii(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

DictEntry parse_record(const std::string& text, const std::string& source, std::size_t line,
                       std::optional<std::size_t>& dim, bool lowercase) {
  json record;
  try {
    record = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(source, line, std::string("malformed record: ") + e.what());
  }
  if (!record.is_object()) throw DataError(source, line, "record must be a JSON object");
  for (const auto& [key, _] : record.items()) {
    if (key != "word" && key != "definition" && key != "word_vector" && key != "context_subword_vectors") {
      throw DataError(source, line, "unknown field '" + key + "'");
    }
  }

  DictEntry entry;
  if (!record.contains("word") || !record["word"].is_string()) {
    throw DataError(source, line, "field 'word' must be a string");
  }
  entry.word = record["word"].get<std::string>();
  if (entry.word.empty()) throw DataError(source, line, "field 'word' is empty");

  if (!record.contains("definition")) throw DataError(source, line, "field 'definition' is missing");
  const json& def = record["definition"];
  if (def.is_string()) {
    entry.definition = split_whitespace(def.get<std::string>());
  } else if (def.is_array()) {
    for (const json& tok : def) {
      if (!tok.is_string()) throw DataError(source, line, "field 'definition' must hold strings");
      auto parts = split_whitespace(tok.get<std::string>());
      entry.definition.insert(entry.definition.end(), parts.begin(), parts.end());
    }
  } else {
    throw DataError(source, line, "field 'definition' must be a string or an array of strings");
  }
  if (entry.definition.empty()) throw DataError(source, line, "field 'definition' is empty");
  if (lowercase) {
    for (auto& tok : entry.definition) tok = lower_ascii(tok);
  }

  if (record.contains("word_vector") && !record["word_vector"].is_null()) {
    entry.word_vector = parse_vector(record["word_vector"], "word_vector", source, line);
    check_dim(dim, entry.word_vector.size(), "word_vector", source, line);
  }
  if (record.contains("context_subword_vectors") && !record["context_subword_vectors"].is_null()) {
    const json& subs = record["context_subword_vectors"];
    if (!subs.is_array() || subs.empty()) {
      throw DataError(source, line, "field 'context_subword_vectors' must be a non-empty array of vectors");
    }
    std::vector<std::vector<double>> vectors;
    for (const json& v : subs) {
      vectors.push_back(parse_vector(v, "context_subword_vectors", source, line));
      check_dim(dim, vectors.back().size(), "context_subword_vectors", source, line);
    }
    if (entry.word_vector.empty()) entry.word_vector = aggregate_subword_vectors(vectors);
    entry.context_subword_vectors = std::move(vectors);
  }
  return entry;
}

}  // namespace

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string definition_text(const DictEntry& entry) {
  std::string out;
  for (const auto& tok : entry.definition) {
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

std::vector<DictEntry> parse_dataset(std::istream& in, const std::string& source_name, const DatasetOptions& options) {
  std::vector<DictEntry> entries;
  std::optional<std::size_t> dim = options.dim;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (std::all_of(text.begin(), text.end(), is_space)) continue;
    entries.push_back(parse_record(text, source_name, line, dim, options.lowercase));
  }
  return entries;
}

std::vector<DictEntry> load_dataset(const std::filesystem::path& path, const DatasetOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  return parse_dataset(in, path.string(), options);
}

void write_dataset(std::ostream& out, std::span<const DictEntry> entries) {
  for (const DictEntry& e : entries) {
    nlohmann::json record;
    record["word"] = e.word;
    record["definition"] = definition_text(e);
    if (!e.word_vector.empty()) record["word_vector"] = e.word_vector;
    if (e.context_subword_vectors) record["context_subword_vectors"] = *e.context_subword_vectors;
    out << record.dump() << '\n';
  }
}

std::vector<double> aggregate_subword_vectors(std::span<const std::vector<double>> vectors) {
  if (vectors.empty()) throw DataError("cannot aggregate an empty list of sub-word vectors");
  std::vector<double> out(vectors.front().size(), 0.0);
  for (const auto& v : vectors) {
    if (v.size() != out.size()) {
      throw DimensionError("sub-word vectors disagree in dimension: " + std::to_string(v.size()) + " vs " +
                           std::to_string(out.size()));
    }
    for (std::size_t i = 0; i < v.size(); ++i) out[i] += v[i];
  }
  return out;
}

ResolvedEntries resolve_word_vectors(std::vector<DictEntry> entries, const EmbeddingTable* table) {
  ResolvedEntries result;
  result.entries.reserve(entries.size());
  for (DictEntry& e : entries) {
    if (e.word_vector.empty() && table) {
      if (auto v = table->lookup(e.word)) e.word_vector.assign(v->begin(), v->end());
    }
    if (e.word_vector.empty()) {
      ++result.dropped;
      continue;
    }
    if (table && !table->empty() && e.word_vector.size() != table->dim()) {
      throw DimensionError("word '" + e.word + "' has a " + std::to_string(e.word_vector.size()) +
                           "-dim vector but the embedding table is " + std::to_string(table->dim()) + "-dim");
    }
    result.entries.push_back(std::move(e));
  }
  return result;
}

}  // namespace neurodict::data
