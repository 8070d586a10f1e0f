// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "neurodict/data/batch.hpp"
#include "neurodict/numerics/ops.hpp"
#include "neurodict/numerics/tensor.hpp"

namespace neurodict::model {

using numerics::Tensor;
using numerics::TokenId;

enum class LossKind { revdic, defmod, word_ae, def_ae, sim };
inline constexpr std::size_t kNumLosses = 5;
inline constexpr std::array<LossKind, kNumLosses> kAllLosses = {LossKind::revdic, LossKind::defmod, LossKind::word_ae,
                                                                 LossKind::def_ae, LossKind::sim};

/// "revdic", "defmod", "wordAE", "defAE", "sim".
std::string_view loss_name(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

using LossSet = std::set<LossKind>;

/// Comma-separated loss names, in canonical order.
std::string format_loss_set(const LossSet& set);
LossSet parse_loss_set(std::string_view text);

struct ModelConfig {
  std::size_t d_w = 300;
  std::size_t d_tok = 256;
  std::size_t d_share = 256;
  std::size_t d_ff = 1024;
  std::size_t depth = 4;
  std::size_t heads = 4;
  double dropout_transformer = 0.3;
  double dropout_linear = 0.2;
  double dropout_token = 0.0;
  bool tie_embeddings = true;
  LossSet active_losses{kAllLosses.begin(), kAllLosses.end()};
  std::size_t vocab_size = 0;

  /// Throws UsageError naming the offending field.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

struct NamedParameter {
  std::string name;
  Tensor tensor;
};

/// Affine map x * w + b with w [in x out] and b [1 x out].
struct Linear {
  Tensor w;
  Tensor b;
  Tensor operator()(const Tensor& x) const;
};

struct LayerNormParams {
  Tensor gamma;
  Tensor beta;
};

/// Post-LN self-attention block; decoder blocks differ only in the causal mask.
struct TransformerBlock {
  Linear q, k, v, o;
  LayerNormParams ln1;
  Linear ff1, ff2;
  LayerNormParams ln2;
};

struct LossBundle {
  /// Empty tensors for inactive losses.
  std::array<Tensor, kNumLosses> parts;
  Tensor total;

  bool has(LossKind kind) const { return static_cast<bool>(parts[static_cast<std::size_t>(kind)]); }
  const Tensor& part(LossKind kind) const { return parts[static_cast<std::size_t>(kind)]; }
  double value(LossKind kind) const { return part(kind).item(); }
};

/// Word and definition encoders meeting in a shared residual layer, with a
/// word decoder and an autoregressive definition decoder reading only from
/// that layer.
class UnifiedModel {
 public:
  UnifiedModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }

  void set_training(bool on) { training_ = on; }
  bool training() const { return training_; }

  void set_active_losses(const LossSet& losses);

  /// L_share(L_in(w)) for word vectors [B x d_w] -> [B x d_share].
  Tensor encode_word(const Tensor& word_vectors);

  /// L_share(pool(T_in(ids))) for `batch` sequences of `seq_len` ids.
  Tensor encode_definition(std::span<const TokenId> ids, std::span<const std::uint8_t> mask, std::size_t batch,
                           std::size_t seq_len);

  /// L_out(shared) -> [B x d_w].
  Tensor decode_word(const Tensor& shared);

  /// Logits [batch*len x V] for decoder inputs starting with BOS. The BOS
  /// position carries the projected shared vector instead of its embedding.
  Tensor decode_definition_logits(const Tensor& shared, std::span<const TokenId> prefix,
                                  std::span<const std::uint8_t> mask, std::size_t batch, std::size_t len);

  /// Active losses along their paths; each encoding is computed once.
  LossBundle forward_losses(const data::Batch& batch);

  /// Unique parameters (a tied matrix appears once) in a fixed order.
  std::vector<NamedParameter>& parameters() { return params_; }
  const std::vector<NamedParameter>& parameters() const { return params_; }
  std::vector<Tensor> parameter_tensors() const;
  std::size_t parameter_count() const;
  const Tensor* find_parameter(std::string_view name) const;

  /// Token-embedding views. With tying all three are the same tensor.
  const Tensor& encoder_embedding() const { return in_embed_; }
  const Tensor& decoder_embedding() const { return out_embed_; }
  const Tensor& output_projection() const { return out_proj_; }

  /// Parameters of the T_in stack (blocks and pooling projection) and of the
  /// T_out stack (blocks, injection, output bias), excluding token embeddings.
  std::vector<Tensor> encoder_stack_parameters() const;
  std::vector<Tensor> decoder_stack_parameters() const;
  std::vector<Tensor> shared_layer_parameters() const;

  std::mt19937_64& dropout_rng() { return dropout_rng_; }
  const std::mt19937_64& dropout_rng() const { return dropout_rng_; }

  /// Independent deep copy preserving tying and RNG state.
  UnifiedModel clone() const;
  /// Copies parameter values (not graph state) from a model of the same shape.
  void assign_parameters(const UnifiedModel& other);

 private:
  Tensor embed_tokens(const Tensor& table, std::span<const TokenId> ids, std::size_t batch, std::size_t len);
  Tensor run_block(const TransformerBlock& block, const Tensor& x, const numerics::AttentionLayout& layout);
  Tensor dropout(const Tensor& x, double rate);

  ModelConfig config_;
  bool training_ = true;
  std::mt19937_64 dropout_rng_;

  Linear l_in_, l_share_, l_out_;
  Tensor in_embed_, out_embed_, out_proj_, out_bias_;
  std::vector<TransformerBlock> enc_blocks_, dec_blocks_;
  Linear pool_proj_, inject_;
  std::vector<NamedParameter> params_;
};

/// Closed-form trainable-scalar count for a configuration.
std::size_t expected_parameter_count(const ModelConfig& config);

/// Sinusoidal position table [len x d].
std::vector<double> sinusoidal_positions(std::size_t len, std::size_t d);

}  // namespace neurodict::model
