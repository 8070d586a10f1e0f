// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "neurodict/data/dataset.hpp"
#include "neurodict/data/embeddings.hpp"
#include "neurodict/data/vocab.hpp"
#include "neurodict/evalmetrics/metrics.hpp"
#include "neurodict/inference/inference.hpp"
#include "neurodict/model/model.hpp"

namespace neurodict::evalmetrics {

struct RevdicEvaluation {
  RetrievalReport report;
  /// Gold rank per entry, in input order.
  std::vector<std::size_t> ranks;
};

/// Reverse lookup of every entry's definition against `candidates`.
RevdicEvaluation evaluate_revdic(model::UnifiedModel& model, const data::Vocabulary& vocab,
                                 const std::vector<data::DictEntry>& entries,
                                 const data::EmbeddingTable& candidates);

struct DefmodEvaluation {
  GenerationReport report;
  /// Generated text per entry, in input order.
  std::vector<std::string> generations;
};

/// Generates from each entry's word vector and scores it against every
/// definition of the same word in `entries`.
DefmodEvaluation evaluate_defmod(model::UnifiedModel& model, const data::Vocabulary& vocab,
                                 const std::vector<data::DictEntry>& entries,
                                 const inference::BeamOptions& options = {});

}  // namespace neurodict::evalmetrics
