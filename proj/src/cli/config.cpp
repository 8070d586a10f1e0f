// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#include "neurodict/cli/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "neurodict/errors.hpp"

namespace neurodict::cli {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

const KeySpec* find_key(std::string_view key) {
  for (const auto& k : config_keys())
    if (k.key == key) return &k;
  return nullptr;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Reader {
 public:
  explicit Reader(const Settings& s) : s_(s) {}

  std::string text(const char* key) const { return s_.get(key); }

  std::size_t count(const char* key, std::size_t min = 0) const {
    const std::string& v = s_.get(key);
    std::size_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
      throw UsageError("config key '" + std::string(key) + "': expected a non-negative integer, got '" + v + "'");
    if (out < min)
      throw UsageError("config key '" + std::string(key) + "': must be at least " + std::to_string(min));
    return out;
  }

  double real(const char* key) const {
    const std::string& v = s_.get(key);
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
      throw UsageError("config key '" + std::string(key) + "': expected a number, got '" + v + "'");
    return out;
  }

  bool flag(const char* key) const {
    const std::string& v = s_.get(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw UsageError("config key '" + std::string(key) + "': expected true or false, got '" + v + "'");
  }

 private:
  const Settings& s_;
};

template <typename F>
auto named(const char* key, F&& f) {
  try {
    return f();
  } catch (const UsageError& e) {
    throw UsageError("config key '" + std::string(key) + "': " + e.what());
  }
}

}  // namespace

const std::vector<KeySpec>& config_keys() {
  static const std::vector<KeySpec> keys = {
      {"data.train", ValueType::text, "", "training set (JSONL)"},
      {"data.dev", ValueType::text, "", "validation set (JSONL)"},
      {"data.embeddings", ValueType::text, "", "embedding table used to fill missing word vectors"},
      {"data.vocab", ValueType::text, "", "existing vocabulary file; built from data.train when empty"},
      {"data.vocab_kind", ValueType::text, "unigram", "unigram or whitespace"},
      {"data.vocab_size", ValueType::integer, "25000", "unigram vocabulary size"},
      {"data.lowercase", ValueType::boolean, "false", "lowercase definitions"},
      {"model.d_w", ValueType::integer, "0", "word vector size; 0 takes it from the data"},
      {"model.d_tok", ValueType::integer, "256", "token embedding size"},
      {"model.d_share", ValueType::integer, "256", "shared layer size"},
      {"model.d_ff", ValueType::integer, "1024", "feed-forward inner size"},
      {"model.depth", ValueType::integer, "4", "blocks per Transformer stack"},
      {"model.heads", ValueType::integer, "4", "attention heads"},
      {"model.dropout_transformer", ValueType::real, "0.3", ""},
      {"model.dropout_linear", ValueType::real, "0.2", ""},
      {"model.dropout_token", ValueType::real, "0", ""},
      {"model.tie_embeddings", ValueType::boolean, "true", ""},
      {"train.lr", ValueType::real, "0.0001", ""},
      {"train.weight_decay", ValueType::real, "1e-06", ""},
      {"train.batch_size", ValueType::integer, "256", ""},
      {"train.max_epochs", ValueType::integer, "100", ""},
      {"train.patience", ValueType::integer, "5", "non-improving validations before stopping"},
      {"train.validate_every", ValueType::integer, "0", "steps between validations; 0 is once per epoch"},
      {"train.seed", ValueType::integer, "0", ""},
      {"train.preset", ValueType::text, "5-task", "1-task-revdic, 1-task-defmod, 3-task, 5-task or custom"},
      {"train.losses", ValueType::text, "", "comma-separated losses for the custom preset"},
      {"train.ablation", ValueType::text, "", "comma-separated presets to compare from one init"},
      {"output.dir", ValueType::text, "run", "directory for checkpoints, history and manifest"},
  };
  return keys;
}

Settings::Settings() {
  for (const auto& k : config_keys()) values_.emplace(std::string(k.key), std::string(k.default_value));
}

void Settings::set(const std::string& key, const std::string& value) {
  const auto it = values_.find(key);
  if (it == values_.end()) throw UsageError("unknown config key '" + key + "'");
  it->second = value;
}

const std::string& Settings::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw UsageError("unknown config key '" + key + "'");
  return it->second;
}

void Settings::apply_text(std::string_view text, const std::string& source_name) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = source_name + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw UsageError(where + "expected 'key = value', got '" + body + "'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (!find_key(key)) throw UsageError(where + "unknown config key '" + key + "'");
    set(key, trim(std::string_view(body).substr(eq + 1)));
  }
}

void Settings::apply_file(const std::filesystem::path& path) { apply_text(read_file(path), path.string()); }

void Settings::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw UsageError("override must look like key=value, got '" + std::string(assignment) + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

nlohmann::ordered_json Settings::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  Reader r(*this);
  for (const auto& k : config_keys()) {
    const std::string key(k.key);
    switch (k.type) {
      case ValueType::integer: j[key] = r.count(key.c_str()); break;
      case ValueType::real: j[key] = r.real(key.c_str()); break;
      case ValueType::boolean: j[key] = r.flag(key.c_str()); break;
      case ValueType::text: j[key] = get(key); break;
    }
  }
  return j;
}

RunConfig resolve(const Settings& s) {
  const Reader r(s);
  RunConfig c;
  c.train_path = r.text("data.train");
  c.dev_path = r.text("data.dev");
  c.embeddings_path = r.text("data.embeddings");
  c.vocab_path = r.text("data.vocab");
  c.vocab_kind = named("data.vocab_kind", [&] { return data::parse_vocab_kind(r.text("data.vocab_kind")); });
  c.vocab_size = r.count("data.vocab_size", 5);
  c.lowercase = r.flag("data.lowercase");

  c.model.d_w = r.count("model.d_w");
  c.model.d_tok = r.count("model.d_tok", 1);
  c.model.d_share = r.count("model.d_share", 1);
  c.model.d_ff = r.count("model.d_ff", 1);
  c.model.depth = r.count("model.depth", 1);
  c.model.heads = r.count("model.heads", 1);
  c.model.dropout_transformer = r.real("model.dropout_transformer");
  c.model.dropout_linear = r.real("model.dropout_linear");
  c.model.dropout_token = r.real("model.dropout_token");
  c.model.tie_embeddings = r.flag("model.tie_embeddings");

  c.train.lr = r.real("train.lr");
  c.train.weight_decay = r.real("train.weight_decay");
  c.train.batch_size = r.count("train.batch_size", 1);
  c.train.max_epochs = r.count("train.max_epochs");
  c.train.patience = r.count("train.patience", 1);
  c.train.validate_every = r.count("train.validate_every");
  c.train.seed = r.count("train.seed");
  c.train.preset = named("train.preset", [&] { return training::parse_preset(r.text("train.preset")); });
  if (c.train.preset == training::TaskPreset::custom) {
    c.train.custom_losses = named("train.losses", [&] { return model::parse_loss_set(r.text("train.losses")); });
  } else if (!r.text("train.losses").empty()) {
    throw UsageError("config key 'train.losses' is only used with train.preset = custom");
  }
  c.train.validate();  // messages already carry the key names
  c.model.active_losses = c.train.active_losses();

  std::string_view list = s.get("train.ablation");
  while (!list.empty()) {
    const auto comma = list.find(',');
    const std::string item = trim(list.substr(0, comma));
    if (!item.empty()) {
      const auto p = named("train.ablation", [&] { return training::parse_preset(item); });
      if (p == training::TaskPreset::custom)
        throw UsageError("config key 'train.ablation': the custom preset cannot be ablated");
      c.ablation.push_back(p);
    }
    list = comma == std::string_view::npos ? std::string_view{} : list.substr(comma + 1);
  }
  c.out_dir = r.text("output.dir");
  if (c.out_dir.empty()) throw UsageError("config key 'output.dir' must not be empty");
  return c;
}

std::string file_hash_hex(const std::filesystem::path& path) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(data::fnv1a64(read_file(path))));
  return buf;
}

std::string Manifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = "neurodict";
  j["version"] = kToolVersion;
  j["command"] = command;
  j["seed"] = seed;
  j["config"] = config;
  auto files = [](const std::vector<std::filesystem::path>& paths) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& p : paths) arr.push_back({{"path", p.string()}, {"fnv1a64", file_hash_hex(p)}});
    return arr;
  };
  j["inputs"] = files(inputs);
  j["outputs"] = files(outputs);
  return j.dump(2) + "\n";
}

}  // namespace neurodict::cli
