// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#include "neurodict/model/model.hpp"

#include <algorithm>
#include <cmath>

#include "neurodict/data/dataset.hpp"
#include "neurodict/data/vocab.hpp"
#include "neurodict/errors.hpp"

namespace neurodict::model {
namespace {

using namespace numerics;

constexpr std::array<std::string_view, kNumLosses> kLossNames = {"revdic", "defmod", "wordAE", "defAE", "sim"};

Tensor uniform_param(Shape shape, double bound, std::mt19937_64& rng) {
  std::vector<double> v(numel(shape));
  for (double& x : v) x = (2.0 * uniform01(rng) - 1.0) * bound;
  return Tensor::from(std::move(shape), std::move(v), true);
}

std::size_t block_params(std::size_t d, std::size_t ff) { return 4 * (d * d + d) + 4 * d + d * ff + ff + ff * d + d; }

}  // namespace

std::string_view loss_name(LossKind kind) { return kLossNames[static_cast<std::size_t>(kind)]; }

LossKind parse_loss_kind(std::string_view name) {
  for (std::size_t i = 0; i < kNumLosses; ++i)
    if (kLossNames[i] == name) return kAllLosses[i];
  throw UsageError("unknown loss '" + std::string(name) + "' (expected revdic, defmod, wordAE, defAE or sim)");
}

std::string format_loss_set(const LossSet& set) {
  std::string out;
  for (LossKind k : set) {
    if (!out.empty()) out += ',';
    out += loss_name(k);
  }
  return out;
}

LossSet parse_loss_set(std::string_view text) {
  LossSet out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    std::string_view item = text.substr(start, comma - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.insert(parse_loss_kind(item));
    start = comma + 1;
  }
  return out;
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw UsageError(std::string("model.") + name + " must be positive");
  };
  positive(d_w, "d_w");
  positive(d_tok, "d_tok");
  positive(d_share, "d_share");
  positive(d_ff, "d_ff");
  positive(depth, "depth");
  positive(heads, "heads");
  if (d_tok % heads != 0) {
    throw UsageError("model.heads (" + std::to_string(heads) + ") must divide model.d_tok (" + std::to_string(d_tok) +
                     ")");
  }
  auto rate = [](double r, const char* name) {
    if (!(r >= 0.0 && r < 1.0)) throw UsageError(std::string("model.") + name + " must be in [0, 1)");
  };
  rate(dropout_transformer, "dropout_transformer");
  rate(dropout_linear, "dropout_linear");
  rate(dropout_token, "dropout_token");
  if (active_losses.empty()) throw UsageError("model.active_losses must not be empty");
  if (vocab_size <= data::kNumSpecials) throw UsageError("model.vocab_size must exceed the special-token count");
}

Tensor Linear::operator()(const Tensor& x) const { return add_row(matmul(x, w), b); }

std::size_t expected_parameter_count(const ModelConfig& c) {
  const std::size_t words = c.d_w * c.d_share + c.d_share + c.d_share * c.d_share + c.d_share + c.d_share * c.d_w + c.d_w;
  const std::size_t enc = c.depth * block_params(c.d_tok, c.d_ff) + c.d_tok * c.d_share + c.d_share;
  const std::size_t dec = c.depth * block_params(c.d_tok, c.d_ff) + c.d_share * c.d_tok + c.d_tok + c.vocab_size;
  const std::size_t emb = (c.tie_embeddings ? 1 : 3) * c.vocab_size * c.d_tok;
  return words + enc + dec + emb;
}

std::vector<double> sinusoidal_positions(std::size_t len, std::size_t d) {
  std::vector<double> pe(len * d);
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t i = 0; i < d; ++i) {
      const double angle =
          static_cast<double>(t) / std::pow(10000.0, static_cast<double>(i - i % 2) / static_cast<double>(d));
      pe[t * d + i] = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

UnifiedModel::UnifiedModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config), dropout_rng_(seed ^ 0x9E3779B97F4A7C15ULL) {
  config_.validate();
  std::mt19937_64 rng(seed);
  auto add = [this](std::string name, Tensor t) {
    params_.push_back({std::move(name), t});
    return t;
  };
  auto linear = [&](const std::string& name, std::size_t in, std::size_t out) {
    Linear l;
    l.w = add(name + ".w", uniform_param({in, out}, 1.0 / std::sqrt(static_cast<double>(in)), rng));
    l.b = add(name + ".b", Tensor::zeros({1, out}, true));
    return l;
  };
  auto norm = [&](const std::string& name, std::size_t d) {
    LayerNormParams p;
    p.gamma = add(name + ".gamma", Tensor::full({1, d}, 1.0, true));
    p.beta = add(name + ".beta", Tensor::zeros({1, d}, true));
    return p;
  };
  auto block = [&](const std::string& name) {
    const std::size_t d = config_.d_tok;
    TransformerBlock b;
    b.q = linear(name + ".attn.q", d, d);
    b.k = linear(name + ".attn.k", d, d);
    b.v = linear(name + ".attn.v", d, d);
    b.o = linear(name + ".attn.o", d, d);
    b.ln1 = norm(name + ".ln1", d);
    b.ff1 = linear(name + ".ff1", d, config_.d_ff);
    b.ff2 = linear(name + ".ff2", config_.d_ff, d);
    b.ln2 = norm(name + ".ln2", d);
    return b;
  };
  const std::size_t v = config_.vocab_size;
  const double embed_bound = 1.0 / std::sqrt(static_cast<double>(config_.d_tok));

  l_in_ = linear("l_in", config_.d_w, config_.d_share);
  l_share_ = linear("l_share", config_.d_share, config_.d_share);
  l_out_ = linear("l_out", config_.d_share, config_.d_w);

  if (config_.tie_embeddings) {
    in_embed_ = add("embed.tied", uniform_param({v, config_.d_tok}, embed_bound, rng));
    out_embed_ = in_embed_;
    out_proj_ = in_embed_;
  } else {
    in_embed_ = add("t_in.embed", uniform_param({v, config_.d_tok}, embed_bound, rng));
  }
  for (std::size_t i = 0; i < config_.depth; ++i) enc_blocks_.push_back(block("t_in.block" + std::to_string(i)));
  pool_proj_ = linear("t_in.pool_proj", config_.d_tok, config_.d_share);

  if (!config_.tie_embeddings) out_embed_ = add("t_out.embed", uniform_param({v, config_.d_tok}, embed_bound, rng));
  inject_ = linear("t_out.inject", config_.d_share, config_.d_tok);
  for (std::size_t i = 0; i < config_.depth; ++i) dec_blocks_.push_back(block("t_out.block" + std::to_string(i)));
  if (!config_.tie_embeddings) out_proj_ = add("t_out.proj", uniform_param({v, config_.d_tok}, embed_bound, rng));
  out_bias_ = add("t_out.proj_bias", Tensor::zeros({1, v}, true));
}

void UnifiedModel::set_active_losses(const LossSet& losses) {
  if (losses.empty()) throw UsageError("active loss set must not be empty");
  config_.active_losses = losses;
}

Tensor UnifiedModel::dropout(const Tensor& x, double rate) { return numerics::dropout(x, rate, training_, dropout_rng_); }

Tensor UnifiedModel::encode_word(const Tensor& word_vectors) {
  if (word_vectors.cols() != config_.d_w) {
    throw DimensionError("word vectors have dimension " + std::to_string(word_vectors.cols()) + ", model expects " +
                         std::to_string(config_.d_w));
  }
  const Tensor h = dropout(l_in_(word_vectors), config_.dropout_linear);
  return add(h, l_share_(h));
}

Tensor UnifiedModel::embed_tokens(const Tensor& table, std::span<const TokenId> ids, std::size_t batch,
                                  std::size_t len) {
  if (batch == 0 || len == 0 || ids.size() != batch * len) {
    throw DimensionError("token block of " + std::to_string(ids.size()) + " ids does not match " +
                         std::to_string(batch) + " x " + std::to_string(len));
  }
  const Tensor e = scale(embedding(table, ids), std::sqrt(static_cast<double>(config_.d_tok)));
  return dropout(e, config_.dropout_token);
}

Tensor UnifiedModel::run_block(const TransformerBlock& b, const Tensor& x, const AttentionLayout& layout) {
  Tensor a = b.o(attention(b.q(x), b.k(x), b.v(x), layout));
  Tensor h = layer_norm(add(x, dropout(a, config_.dropout_transformer)), b.ln1.gamma, b.ln1.beta);
  Tensor f = b.ff2(relu(b.ff1(h)));
  return layer_norm(add(h, dropout(f, config_.dropout_transformer)), b.ln2.gamma, b.ln2.beta);
}

namespace {

Tensor positions(std::size_t batch, std::size_t len, std::size_t d) {
  const auto pe = sinusoidal_positions(len, d);
  std::vector<double> out;
  out.reserve(batch * len * d);
  for (std::size_t b = 0; b < batch; ++b) out.insert(out.end(), pe.begin(), pe.end());
  return Tensor::from({batch * len, d}, std::move(out));
}

}  // namespace

Tensor UnifiedModel::encode_definition(std::span<const TokenId> ids, std::span<const std::uint8_t> mask,
                                       std::size_t batch, std::size_t seq_len) {
  Tensor x = embed_tokens(in_embed_, ids, batch, seq_len);
  x = dropout(add(x, positions(batch, seq_len, config_.d_tok)), config_.dropout_transformer);
  AttentionLayout layout{batch, seq_len, config_.heads, false, {mask.begin(), mask.end()}};
  for (const auto& b : enc_blocks_) x = run_block(b, x, layout);
  std::vector<std::uint8_t> pool_mask(mask.begin(), mask.end());
  if (pool_mask.empty()) pool_mask.assign(batch * seq_len, 1);
  const Tensor pooled = masked_mean_rows(x, pool_mask, batch, seq_len);
  const Tensor h = dropout(pool_proj_(pooled), config_.dropout_linear);
  return add(h, l_share_(h));
}

Tensor UnifiedModel::decode_word(const Tensor& shared) {
  if (shared.cols() != config_.d_share) {
    throw DimensionError("shared vector has dimension " + std::to_string(shared.cols()) + ", model expects " +
                         std::to_string(config_.d_share));
  }
  return l_out_(shared);
}

Tensor UnifiedModel::decode_definition_logits(const Tensor& shared, std::span<const TokenId> prefix,
                                              std::span<const std::uint8_t> mask, std::size_t batch,
                                              std::size_t len) {
  if (shared.cols() != config_.d_share || shared.rows() != batch) {
    throw DimensionError("shared block " + to_string(shared.shape()) + " does not match " + std::to_string(batch) +
                         " x " + std::to_string(config_.d_share));
  }
  Tensor x = embed_tokens(out_embed_, prefix, batch, len);
  std::vector<std::size_t> first_rows(batch);
  for (std::size_t b = 0; b < batch; ++b) first_rows[b] = b * len;
  x = overwrite_rows(x, inject_(shared), first_rows);
  x = dropout(add(x, positions(batch, len, config_.d_tok)), config_.dropout_transformer);
  AttentionLayout layout{batch, len, config_.heads, true, {mask.begin(), mask.end()}};
  for (const auto& b : dec_blocks_) x = run_block(b, x, layout);
  return add_row(matmul_nt(x, out_proj_), out_bias_);
}

LossBundle UnifiedModel::forward_losses(const data::Batch& batch) {
  const LossSet& active = config_.active_losses;
  auto on = [&](LossKind k) { return active.count(k) != 0; };
  const bool need_word = on(LossKind::defmod) || on(LossKind::word_ae) || on(LossKind::sim);
  const bool need_def = on(LossKind::revdic) || on(LossKind::def_ae) || on(LossKind::sim);

  Tensor s_word, s_def;
  if (need_word) s_word = encode_word(batch.word_vectors);
  if (need_def) s_def = encode_definition(batch.token_ids, batch.mask, batch.size, batch.seq_len);
  auto generate_loss = [&](const Tensor& shared) {
    const Tensor logits =
        decode_definition_logits(shared, batch.decoder_input, batch.decoder_mask, batch.size, batch.decoder_len());
    return cross_entropy_loss(logits, batch.decoder_targets, data::kPad);
  };

  LossBundle out;
  auto set = [&](LossKind k, Tensor t) { out.parts[static_cast<std::size_t>(k)] = std::move(t); };
  if (on(LossKind::revdic)) set(LossKind::revdic, mse_loss(decode_word(s_def), batch.word_vectors));
  if (on(LossKind::defmod)) set(LossKind::defmod, generate_loss(s_word));
  if (on(LossKind::word_ae)) set(LossKind::word_ae, mse_loss(decode_word(s_word), batch.word_vectors));
  if (on(LossKind::def_ae)) set(LossKind::def_ae, generate_loss(s_def));
  if (on(LossKind::sim)) set(LossKind::sim, mse_loss(s_def, s_word));
  for (const Tensor& p : out.parts) {
    if (!p) continue;
    out.total = out.total ? add(out.total, p) : p;
  }
  return out;
}

std::vector<Tensor> UnifiedModel::parameter_tensors() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.tensor);
  return out;
}

std::size_t UnifiedModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

const Tensor* UnifiedModel::find_parameter(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p.tensor;
  return nullptr;
}

namespace {

void append_block(std::vector<Tensor>& out, const TransformerBlock& b) {
  for (const Linear* l : {&b.q, &b.k, &b.v, &b.o}) {
    out.push_back(l->w);
    out.push_back(l->b);
  }
  out.push_back(b.ln1.gamma);
  out.push_back(b.ln1.beta);
  for (const Linear* l : {&b.ff1, &b.ff2}) {
    out.push_back(l->w);
    out.push_back(l->b);
  }
  out.push_back(b.ln2.gamma);
  out.push_back(b.ln2.beta);
}

}  // namespace

std::vector<Tensor> UnifiedModel::encoder_stack_parameters() const {
  std::vector<Tensor> out;
  for (const auto& b : enc_blocks_) append_block(out, b);
  out.push_back(pool_proj_.w);
  out.push_back(pool_proj_.b);
  return out;
}

std::vector<Tensor> UnifiedModel::decoder_stack_parameters() const {
  std::vector<Tensor> out;
  for (const auto& b : dec_blocks_) append_block(out, b);
  out.push_back(inject_.w);
  out.push_back(inject_.b);
  out.push_back(out_bias_);
  return out;
}

std::vector<Tensor> UnifiedModel::shared_layer_parameters() const { return {l_share_.w, l_share_.b}; }

UnifiedModel UnifiedModel::clone() const {
  UnifiedModel copy(config_, 0);
  copy.assign_parameters(*this);
  copy.dropout_rng_ = dropout_rng_;
  copy.training_ = training_;
  return copy;
}

void UnifiedModel::assign_parameters(const UnifiedModel& other) {
  if (other.params_.size() != params_.size()) throw DimensionError("parameter lists differ in length");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& src = other.params_[i];
    auto& dst = params_[i];
    if (src.name != dst.name || src.tensor.shape() != dst.tensor.shape()) {
      throw DimensionError("parameter '" + src.name + "' does not match '" + dst.name + "'");
    }
    std::copy(src.tensor.data().begin(), src.tensor.data().end(), dst.tensor.data().begin());
  }
}

}  // namespace neurodict::model
