// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#include "neurodict/training/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "neurodict/errors.hpp"

namespace neurodict::training {
namespace {

constexpr std::string_view kMagic{"NDCKPT\0\0", 8};

constexpr std::uint32_t tag(const char (&s)[5]) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(s[0])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[3])) << 24;
}

constexpr std::uint32_t kConfigTag = tag("CONF");
constexpr std::uint32_t kVocabTag = tag("VOCB");
constexpr std::uint32_t kParamsTag = tag("PARM");
constexpr std::uint32_t kRngTag = tag("RNGS");
constexpr std::uint32_t kTrainerTag = tag("TRNR");
constexpr std::uint32_t kSumTag = tag("SUMS");

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    buf_.append(s);
  }
  void doubles(std::span<const double> v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void raw(std::string_view s) { buf_.append(s); }
  void section(std::uint32_t t, const Writer& body) {
    u32(t);
    str(body.buf_);
  }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string_view data, std::string source, std::string what)
      : data_(data), source_(std::move(source)), what_(std::move(what)) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t size() {
    const std::uint64_t v = u64();
    if (v > data_.size()) fail("implausible length " + std::to_string(v));
    return static_cast<std::size_t>(v);
  }
  std::string_view str() {
    const std::size_t n = size();
    need(n);
    const auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<double> doubles() {
    const std::size_t n = size();
    need(n * 8);
    std::vector<double> v(n);
    for (double& x : v) x = f64();
    return v;
  }
  bool done() const { return pos_ == data_.size(); }
  std::size_t pos() const { return pos_; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError(source_ + ": corrupt checkpoint (" + what_ + "): " + msg);
  }

 private:
  void need(std::size_t n) {
    if (data_.size() - pos_ < n) fail("truncated");
  }

  std::string_view data_;
  std::size_t pos_ = 0;
  std::string source_;
  std::string what_;
};

void write_config(Writer& w, const model::ModelConfig& c) {
  for (std::size_t v : {c.d_w, c.d_tok, c.d_share, c.d_ff, c.depth, c.heads, c.vocab_size}) w.u64(v);
  for (double v : {c.dropout_transformer, c.dropout_linear, c.dropout_token}) w.f64(v);
  w.u8(c.tie_embeddings ? 1 : 0);
  w.str(model::format_loss_set(c.active_losses));
}

model::ModelConfig read_config(Reader& r) {
  model::ModelConfig c;
  for (std::size_t* v : {&c.d_w, &c.d_tok, &c.d_share, &c.d_ff, &c.depth, &c.heads, &c.vocab_size}) *v = r.u64();
  for (double* v : {&c.dropout_transformer, &c.dropout_linear, &c.dropout_token}) *v = r.f64();
  c.tie_embeddings = r.u8() != 0;
  c.active_losses = model::parse_loss_set(r.str());
  return c;
}

void write_values(Writer& w, const LossValues& v) {
  for (double x : v) w.f64(x);
}

LossValues read_values(Reader& r) {
  LossValues v{};
  for (double& x : v) x = r.f64();
  return v;
}

void write_trainer(Writer& w, const TrainerState& s) {
  const TrainConfig& c = s.config;
  w.f64(c.lr);
  w.f64(c.weight_decay);
  for (std::uint64_t v : {std::uint64_t{c.batch_size}, std::uint64_t{c.max_epochs}, std::uint64_t{c.patience},
                          std::uint64_t{c.validate_every}, c.seed})
    w.u64(v);
  w.str(preset_name(c.preset));
  w.str(model::format_loss_set(c.custom_losses));

  const auto& a = s.adam;
  for (double v : {a.config.lr, a.config.beta1, a.config.beta2, a.config.weight_decay, a.config.epsilon}) w.f64(v);
  w.u64(a.step);
  for (const auto* moments : {&a.m, &a.v}) {
    w.u64(moments->size());
    for (const auto& m : *moments) w.doubles(m);
  }

  w.u64(s.epoch);
  w.u64(s.step);
  w.u64(s.bad_validations);
  w.f64(s.best_dev);
  w.u8(s.finished ? 1 : 0);

  const auto& h = s.history;
  w.str(model::format_loss_set(h.active_losses));
  w.u64(h.records.size());
  for (const auto& rec : h.records) {
    w.u64(rec.epoch);
    w.u64(rec.step);
    write_values(w, rec.train);
    write_values(w, rec.dev);
    w.f64(rec.train_total);
    w.f64(rec.dev_total);
  }
  w.u8(h.best_index ? 1 : 0);
  w.u64(h.best_index.value_or(0));
  w.u8(h.stopped_early ? 1 : 0);

  w.u64(s.best_params.size());
  for (const auto& p : s.best_params) w.doubles(p);
}

TrainerState read_trainer(Reader& r) {
  TrainerState s;
  TrainConfig& c = s.config;
  c.lr = r.f64();
  c.weight_decay = r.f64();
  c.batch_size = r.u64();
  c.max_epochs = r.u64();
  c.patience = r.u64();
  c.validate_every = r.u64();
  c.seed = r.u64();
  try {
    c.preset = parse_preset(r.str());
    c.custom_losses = model::parse_loss_set(r.str());
  } catch (const UsageError& e) {
    r.fail(e.what());
  }

  auto& a = s.adam;
  for (double* v : {&a.config.lr, &a.config.beta1, &a.config.beta2, &a.config.weight_decay, &a.config.epsilon})
    *v = r.f64();
  a.step = r.u64();
  for (auto* moments : {&a.m, &a.v}) {
    moments->resize(r.size());
    for (auto& m : *moments) m = r.doubles();
  }

  s.epoch = r.u64();
  s.step = r.u64();
  s.bad_validations = r.u64();
  s.best_dev = r.f64();
  s.finished = r.u8() != 0;

  auto& h = s.history;
  try {
    h.active_losses = model::parse_loss_set(r.str());
  } catch (const UsageError& e) {
    r.fail(e.what());
  }
  h.records.resize(r.size());
  for (auto& rec : h.records) {
    rec.epoch = r.u64();
    rec.step = r.u64();
    rec.train = read_values(r);
    rec.dev = read_values(r);
    rec.train_total = r.f64();
    rec.dev_total = r.f64();
  }
  const bool has_best = r.u8() != 0;
  const std::uint64_t best = r.u64();
  if (has_best) h.best_index = static_cast<std::size_t>(best);
  h.stopped_early = r.u8() != 0;

  s.best_params.resize(r.size());
  for (auto& p : s.best_params) p = r.doubles();
  return s;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint '" + path.string() + "'");
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string serialize_checkpoint(const UnifiedModel& model, const data::Vocabulary& vocab,
                                 const TrainerState* trainer) {
  if (model.config().vocab_size != vocab.size()) {
    throw DimensionError("model vocabulary size " + std::to_string(model.config().vocab_size) +
                         " does not match vocabulary of " + std::to_string(vocab.size()));
  }
  Writer out;
  out.raw(kMagic);
  out.u32(kCheckpointVersion);

  Writer conf;
  write_config(conf, model.config());
  out.section(kConfigTag, conf);

  Writer voc;
  voc.u64(vocab.hash());
  voc.str(vocab.serialize());
  out.section(kVocabTag, voc);

  Writer params;
  params.u64(model.parameters().size());
  for (const auto& p : model.parameters()) {
    params.str(p.name);
    params.u64(p.tensor.shape().size());
    for (std::size_t d : p.tensor.shape()) params.u64(d);
    params.doubles(p.tensor.data());
  }
  out.section(kParamsTag, params);

  Writer rng;
  std::ostringstream rng_text;
  rng_text << model.dropout_rng();
  rng.str(rng_text.str());
  out.section(kRngTag, rng);

  if (trainer) {
    Writer tr;
    write_trainer(tr, *trainer);
    out.section(kTrainerTag, tr);
  }

  const std::uint64_t sum = data::fnv1a64(out.bytes());
  out.u32(kSumTag);
  out.u64(sum);
  return out.bytes();
}

Checkpoint deserialize_checkpoint(std::string_view bytes, const std::string& source_name,
                                  const data::Vocabulary* expected_vocab) {
  Reader top(bytes, source_name, "header");
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    throw DataError(source_name + ": not a neurodict checkpoint");
  }
  for (std::size_t i = 0; i < kMagic.size(); ++i) top.u8();
  const std::uint32_t version = top.u32();
  if (version != kCheckpointVersion) {
    throw DataError(source_name + ": unsupported checkpoint version " + std::to_string(version) + " (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  }

  std::map<std::uint32_t, std::string_view> sections;
  for (;;) {
    const std::size_t at = top.pos();
    const std::uint32_t t = top.u32();
    if (t == kSumTag) {
      const std::uint64_t stored = top.u64();
      if (!top.done()) top.fail("trailing bytes after checksum");
      if (data::fnv1a64(bytes.substr(0, at)) != stored) top.fail("checksum mismatch");
      break;
    }
    const auto body = top.str();
    if (!sections.emplace(t, body).second) top.fail("duplicate section");
  }
  auto section = [&](std::uint32_t t, const char* name) {
    const auto it = sections.find(t);
    if (it == sections.end()) top.fail(std::string("missing section ") + name);
    return Reader(it->second, source_name, name);
  };

  Reader conf = section(kConfigTag, "CONF");
  model::ModelConfig config;
  try {
    config = read_config(conf);
    config.validate();
  } catch (const UsageError& e) {
    conf.fail(e.what());
  }

  Reader voc = section(kVocabTag, "VOCB");
  const std::uint64_t stored_hash = voc.u64();
  data::Vocabulary vocab = data::Vocabulary::deserialize(voc.str(), source_name + " (vocabulary)");
  if (vocab.hash() != stored_hash) voc.fail("vocabulary hash does not match its contents");
  if (expected_vocab && expected_vocab->hash() != stored_hash) {
    throw DataError(source_name + ": vocabulary hash mismatch (checkpoint " + hex64(stored_hash) + ", given " +
                    hex64(expected_vocab->hash()) + ")");
  }
  if (vocab.size() != config.vocab_size) voc.fail("vocabulary size disagrees with the model config");

  UnifiedModel model(config, 0);
  Reader params = section(kParamsTag, "PARM");
  auto& dst = model.parameters();
  if (params.u64() != dst.size()) params.fail("parameter count differs from the model config");
  for (auto& p : dst) {
    const auto name = params.str();
    if (name != p.name) params.fail("expected parameter '" + p.name + "', found '" + std::string(name) + "'");
    numerics::Shape shape(params.size());
    for (std::size_t& d : shape) d = params.u64();
    if (shape != p.tensor.shape()) params.fail("parameter '" + p.name + "' has the wrong shape");
    const auto values = params.doubles();
    if (values.size() != p.tensor.numel()) params.fail("parameter '" + p.name + "' has the wrong size");
    std::copy(values.begin(), values.end(), p.tensor.data().begin());
  }

  Reader rng = section(kRngTag, "RNGS");
  std::istringstream rng_text{std::string(rng.str())};
  rng_text >> model.dropout_rng();
  if (rng_text.fail()) rng.fail("unreadable RNG state");

  std::optional<TrainerState> trainer;
  if (sections.count(kTrainerTag)) {
    Reader tr = section(kTrainerTag, "TRNR");
    trainer = read_trainer(tr);
    if (!trainer->best_params.empty() && trainer->best_params.size() != dst.size()) {
      tr.fail("best-parameter snapshot does not match the model");
    }
  }
  model.set_training(false);
  return Checkpoint{std::move(model), std::move(vocab), std::move(trainer)};
}

void save_checkpoint(const std::filesystem::path& path, const UnifiedModel& model, const data::Vocabulary& vocab,
                     const TrainerState* trainer) {
  write_file(path, serialize_checkpoint(model, vocab, trainer));
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const data::Vocabulary* expected_vocab) {
  return deserialize_checkpoint(read_file(path), path.string(), expected_vocab);
}

void save_trainer(const std::filesystem::path& path, const Trainer& trainer) {
  save_checkpoint(path, trainer.model(), trainer.vocab(), &trainer.state());
}

void save_best(const std::filesystem::path& path, const Trainer& trainer) {
  save_checkpoint(path, trainer.best_model(), trainer.vocab(), &trainer.state());
}

Trainer resume_trainer(Checkpoint checkpoint, std::vector<data::DictEntry> train, std::vector<data::DictEntry> dev) {
  if (!checkpoint.trainer) throw UsageError("checkpoint carries no trainer state to resume from");
  return Trainer(std::move(checkpoint.model), std::move(train), std::move(dev), std::move(checkpoint.vocab),
                 std::move(*checkpoint.trainer));
}

}  // namespace neurodict::training
