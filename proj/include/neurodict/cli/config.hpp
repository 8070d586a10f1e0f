// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "neurodict/data/vocab.hpp"
#include "neurodict/model/model.hpp"
#include "neurodict/training/trainer.hpp"

namespace neurodict::cli {

enum class ValueType { integer, real, boolean, text };

struct KeySpec {
  std::string_view key;
  ValueType type;
  std::string_view default_value;
  std::string_view help;
};

/// Every accepted key with its default, in manifest order.
const std::vector<KeySpec>& config_keys();

/// Flat key = value settings with dotted section keys. Starts from defaults;
/// later assignments win.
class Settings {
 public:
  Settings();

  /// Throws UsageError naming the key when it is unknown.
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;

  /// Lines are "key = value"; '#' starts a comment; blank lines are skipped.
  /// Errors are UsageError with "source:line:" and the key name.
  void apply_text(std::string_view text, const std::string& source_name);
  void apply_file(const std::filesystem::path& path);
  /// "key=value"
  void apply_override(std::string_view assignment);

  /// Typed view of all keys, for the manifest.
  nlohmann::ordered_json to_json() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

struct RunConfig {
  /// d_w 0 means "take it from the data"; vocab_size is filled once the
  /// vocabulary exists.
  model::ModelConfig model;
  training::TrainConfig train;
  std::string train_path;
  std::string dev_path;
  std::string embeddings_path;
  std::string vocab_path;
  data::VocabKind vocab_kind = data::VocabKind::unigram;
  std::size_t vocab_size = 25000;
  bool lowercase = false;
  std::string out_dir;
  std::vector<training::TaskPreset> ablation;
};

/// Converts and range-checks every value; errors name the key.
RunConfig resolve(const Settings& settings);

std::string file_hash_hex(const std::filesystem::path& path);

/// Run record: tool version, command, resolved settings, seed, input and
/// output files with FNV-1a hashes.
struct Manifest {
  std::string command;
  nlohmann::ordered_json config;
  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;

  std::string to_json() const;
};

inline constexpr std::string_view kToolVersion = "0.1.0";

}  // namespace neurodict::cli
