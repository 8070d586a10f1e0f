// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#include "neurodict/cli/grad_suite.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <random>

#include "neurodict/data/batch.hpp"
#include "neurodict/errors.hpp"
#include "neurodict/model/model.hpp"
#include "neurodict/numerics/gradcheck.hpp"
#include "neurodict/numerics/ops.hpp"

namespace neurodict::cli {
namespace {

using numerics::OpUnderTest;
using numerics::Shape;
using numerics::Tensor;
using numerics::TokenId;

struct OpCase {
  std::string name;
  std::vector<Shape> shapes;
  OpUnderTest op;
};

const std::vector<TokenId> kIds = {2, 0, 2, 1};
const std::vector<std::uint8_t> kMask = {1, 1, 0, 1, 0, 0};
const std::vector<std::size_t> kRows = {0, 2};
const std::vector<TokenId> kTargets = {1, 0, 2, 3, 2, 0};

std::vector<OpCase> op_cases() {
  using namespace numerics;
  return {
      {"matmul", {{3, 4}, {4, 2}}, [](auto in) { return matmul(in[0], in[1]); }},
      {"matmul_nt", {{3, 4}, {5, 4}}, [](auto in) { return matmul_nt(in[0], in[1]); }},
      {"transpose", {{3, 4}}, [](auto in) { return transpose(in[0]); }},
      {"add", {{2, 3}, {2, 3}}, [](auto in) { return add(in[0], in[1]); }},
      {"sub", {{2, 3}, {2, 3}}, [](auto in) { return sub(in[0], in[1]); }},
      {"mul", {{2, 3}, {2, 3}}, [](auto in) { return mul(in[0], in[1]); }},
      {"scale", {{2, 3}}, [](auto in) { return scale(in[0], -1.7); }},
      {"add_row", {{4, 3}, {1, 3}}, [](auto in) { return add_row(in[0], in[1]); }},
      {"relu", {{4, 5}}, [](auto in) { return relu(in[0]); }},
      {"dropout", {{4, 4}},
       [](auto in) {
         std::mt19937_64 rng(5);
         return dropout(in[0], 0.3, true, rng);
       }},
      {"sum", {{3, 3}}, [](auto in) { return sum(in[0]); }},
      {"mean", {{3, 3}}, [](auto in) { return mean(in[0]); }},
      {"softmax", {{3, 6}}, [](auto in) { return softmax(in[0]); }},
      {"layer_norm", {{4, 6}, {6}, {6}}, [](auto in) { return layer_norm(in[0], in[1], in[2]); }},
      {"embedding", {{3, 4}}, [](auto in) { return embedding(in[0], kIds); }},
      {"masked_mean_rows", {{6, 4}}, [](auto in) { return masked_mean_rows(in[0], kMask, 2, 3); }},
      {"overwrite_rows", {{4, 3}, {2, 3}}, [](auto in) { return overwrite_rows(in[0], in[1], kRows); }},
      {"attention", {{6, 4}, {6, 4}, {6, 4}},
       [](auto in) {
         AttentionLayout layout{2, 3, 2, false, kMask};
         return attention(in[0], in[1], in[2], layout);
       }},
      {"attention_causal", {{6, 4}, {6, 4}, {6, 4}},
       [](auto in) {
         AttentionLayout layout{2, 3, 2, true, {}};
         return attention(in[0], in[1], in[2], layout);
       }},
      {"mse_loss", {{3, 4}, {3, 4}}, [](auto in) { return mse_loss(in[0], in[1]); }},
      {"cross_entropy_loss", {{6, 5}}, [](auto in) { return cross_entropy_loss(in[0], kTargets, 0); }},
  };
}

// Same value, gradient off by half of ones on the first input.
Tensor corrupt(const Tensor& out, const Tensor& first) {
  using namespace numerics;
  return add(sum(out), scale(sum(sub(first, first.detach())), 0.5));
}

GradSuiteEntry finish(std::string name, const numerics::GradCheckResult& r) {
  return {std::move(name), r.max_rel_error, r.checked, r.max_rel_error < kGradTolerance};
}

GradSuiteEntry check_model(const std::string& name, bool tied, const GradSuiteOptions& options, bool fault) {
  const std::vector<std::string> defs{"a small cat", "to run very fast", "green", "the colour of the sky"};
  std::vector<data::DictEntry> entries;
  std::mt19937_64 rng(options.seed);
  for (std::size_t i = 0; i < defs.size(); ++i) {
    data::DictEntry e;
    e.word = "w" + std::to_string(i);
    e.definition = data::split_whitespace(defs[i]);
    for (int j = 0; j < 6; ++j) e.word_vector.push_back(2.0 * numerics::uniform01(rng) - 1.0);
    entries.push_back(e);
  }
  const auto vocab = data::build_whitespace_vocab(defs);
  const std::vector<std::size_t> idx{0, 1, 2, 3};
  const auto batch = data::make_batch(entries, idx, vocab);

  model::ModelConfig c;
  c.d_w = 6;
  c.d_tok = 8;
  c.d_share = 5;
  c.d_ff = 12;
  c.depth = 2;
  c.heads = 2;
  c.dropout_transformer = c.dropout_linear = c.dropout_token = 0.0;
  c.tie_embeddings = tied;
  c.vocab_size = vocab.size();
  model::UnifiedModel m(c, options.seed + 100);
  std::vector<Tensor> wrt = m.parameter_tensors();
  numerics::GradCheckOptions gopts;
  gopts.eps = options.eps;
  gopts.seed = options.seed;
  gopts.max_elements_per_input = 8;
  const auto r = numerics::grad_check(
      [&] {
        const Tensor total = m.forward_losses(batch).total;
        return fault ? corrupt(total, wrt.front()) : total;
      },
      wrt, gopts);
  return finish(name, r);
}

}  // namespace

std::vector<std::string> grad_suite_names() {
  std::vector<std::string> names;
  for (const auto& c : op_cases()) names.push_back(c.name);
  names.push_back("model_5task_tied");
  names.push_back("model_5task_untied");
  return names;
}

std::vector<GradSuiteEntry> run_grad_suite(const GradSuiteOptions& options) {
  if (!options.inject_fault.empty()) {
    const auto names = grad_suite_names();
    if (std::find(names.begin(), names.end(), options.inject_fault) == names.end())
      throw UsageError("unknown gradient check '" + options.inject_fault + "'");
  }
  std::vector<GradSuiteEntry> out;
  for (const auto& c : op_cases()) {
    OpUnderTest op = c.op;
    if (c.name == options.inject_fault) op = [inner = c.op](std::span<const Tensor> in) { return corrupt(inner(in), in[0]); };
    out.push_back(finish(c.name, numerics::grad_check(op, c.shapes, options.eps, options.seed)));
  }
  out.push_back(check_model("model_5task_tied", true, options, options.inject_fault == "model_5task_tied"));
  out.push_back(check_model("model_5task_untied", false, options, options.inject_fault == "model_5task_untied"));
  return out;
}

std::string format_grad_suite(const std::vector<GradSuiteEntry>& entries) {
  std::string out;
  std::size_t failed = 0;
  double worst = 0.0;
  char buf[160];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof buf, "%-20s %-4s max_rel_err=%.3e checked=%zu\n", e.name.c_str(),
                  e.passed ? "PASS" : "FAIL", e.max_rel_error, e.checked);
    out += buf;
    failed += e.passed ? 0 : 1;
    worst = std::max(worst, e.max_rel_error);
  }
  std::snprintf(buf, sizeof buf, "%zu checks, %zu failed, worst %.3e (tolerance %.0e)\n", entries.size(), failed, worst,
                kGradTolerance);
  out += buf;
  return out;
}

}  // namespace neurodict::cli
