// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "neurodict/data/vocab.hpp"
#include "neurodict/model/model.hpp"
#include "neurodict/training/trainer.hpp"

namespace neurodict::training {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Model, vocabulary and (optionally) the trainer state needed to resume.
struct Checkpoint {
  UnifiedModel model;
  data::Vocabulary vocab;
  std::optional<TrainerState> trainer;
};

/// Binary container: magic, version, tagged sections (model config,
/// vocabulary with hash, named parameters, dropout RNG, trainer state) and an
/// FNV-1a checksum trailer. All numbers are little-endian; doubles are stored
/// bit for bit, so save -> load -> save reproduces the same bytes.
std::string serialize_checkpoint(const UnifiedModel& model, const data::Vocabulary& vocab,
                                 const TrainerState* trainer = nullptr);

/// Throws DataError on a bad magic, version, checksum or section, and when
/// `expected_vocab` is given and its hash differs from the stored one.
Checkpoint deserialize_checkpoint(std::string_view bytes, const std::string& source_name = "checkpoint",
                                  const data::Vocabulary* expected_vocab = nullptr);

void save_checkpoint(const std::filesystem::path& path, const UnifiedModel& model, const data::Vocabulary& vocab,
                     const TrainerState* trainer = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path, const data::Vocabulary* expected_vocab = nullptr);

/// Snapshot of a running trainer (current model plus resume state).
void save_trainer(const std::filesystem::path& path, const Trainer& trainer);
/// Best model of a trainer, with its state attached for provenance.
void save_best(const std::filesystem::path& path, const Trainer& trainer);

/// Rebuilds a trainer from a checkpoint that carries trainer state.
Trainer resume_trainer(Checkpoint checkpoint, std::vector<data::DictEntry> train, std::vector<data::DictEntry> dev);

}  // namespace neurodict::training
