// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "neurodict/data/dataset.hpp"
#include "neurodict/data/vocab.hpp"
#include "neurodict/model/model.hpp"
#include "neurodict/numerics/optim.hpp"

namespace neurodict::training {

using model::LossKind;
using model::LossSet;
using model::UnifiedModel;

enum class TaskPreset { revdic_only, defmod_only, three_task, five_task, custom };

/// "1-task-revdic", "1-task-defmod", "3-task", "5-task", "custom".
std::string_view preset_name(TaskPreset preset);
TaskPreset parse_preset(std::string_view name);
/// Loss set a preset trains. Throws UsageError for custom.
LossSet preset_losses(TaskPreset preset);

struct TrainConfig {
  double lr = 1e-4;
  double weight_decay = 1e-6;
  std::size_t batch_size = 256;
  std::size_t max_epochs = 100;
  /// Consecutive non-improving validations tolerated before stopping.
  std::size_t patience = 5;
  /// Validate every N optimizer steps; 0 validates once per epoch.
  std::size_t validate_every = 0;
  std::uint64_t seed = 0;
  TaskPreset preset = TaskPreset::five_task;
  /// Used only with TaskPreset::custom.
  LossSet custom_losses;

  void validate() const;
  LossSet active_losses() const;

  bool operator==(const TrainConfig&) const = default;
};

/// Losses of all five paths on one split. Inactive paths are still measured
/// so ablation curves share columns.
using LossValues = std::array<double, model::kNumLosses>;

struct HistoryRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  LossValues train{};
  LossValues dev{};
  double train_total = 0.0;  // sum over active losses
  double dev_total = 0.0;
  /// Not serialized and not compared: it differs between otherwise identical runs.
  double wall_seconds = 0.0;

  bool operator==(const HistoryRecord& o) const {
    return epoch == o.epoch && step == o.step && train == o.train && dev == o.dev && train_total == o.train_total &&
           dev_total == o.dev_total;
  }
};

struct TrainHistory {
  LossSet active_losses;
  std::vector<HistoryRecord> records;
  /// Index into records of the best monitored validation, if any.
  std::optional<std::size_t> best_index;
  bool stopped_early = false;

  bool operator==(const TrainHistory&) const = default;
};

/// Tab-separated table: epoch, step, train/dev totals, then train_<loss> and
/// dev_<loss> for every loss.
std::string history_tsv(const TrainHistory& history);

/// Mean per-loss values over the batches of `entries` in input order, with
/// dropout off and no graph recording. The model's training flag is restored.
LossValues validate(UnifiedModel& model, const std::vector<data::DictEntry>& entries, const data::Vocabulary& vocab,
                    std::size_t batch_size);

double active_total(const LossValues& values, const LossSet& active);

/// Everything needed to continue a run bit-exactly.
struct TrainerState {
  TrainConfig config;
  numerics::AdamState adam;
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::size_t bad_validations = 0;
  double best_dev = 0.0;
  bool finished = false;
  TrainHistory history;
  /// Parameter values of the best model, in UnifiedModel::parameters() order.
  std::vector<std::vector<double>> best_params;

  bool operator==(const TrainerState&) const = default;
};

/// Multi-task training with validation-based early stopping. Validation runs
/// once before training (epoch 0, recorded but never selected) and then per
/// epoch or every validate_every steps.
class Trainer {
 public:
  Trainer(UnifiedModel model, std::vector<data::DictEntry> train, std::vector<data::DictEntry> dev,
          data::Vocabulary vocab, TrainConfig config);

  /// Continues from a saved state. The model must hold the saved current
  /// parameters and dropout RNG.
  Trainer(UnifiedModel model, std::vector<data::DictEntry> train, std::vector<data::DictEntry> dev,
          data::Vocabulary vocab, TrainerState state);

  /// Trains one epoch. Returns false once training has finished.
  bool step_epoch();
  void run();

  bool finished() const { return state_.finished; }
  const UnifiedModel& model() const { return model_; }
  /// Copy of the model with the best monitored dev loss (the current model if
  /// no post-training validation has happened yet).
  UnifiedModel best_model() const;
  const TrainHistory& history() const { return state_.history; }
  const TrainerState& state() const { return state_; }
  const data::Vocabulary& vocab() const { return vocab_; }

  /// Lets callers raise max_epochs or patience when resuming.
  void set_limits(std::size_t max_epochs, std::size_t patience);

 private:
  void validate_and_track();
  void check_finite(const model::LossBundle& losses) const;

  UnifiedModel model_;
  std::vector<data::DictEntry> train_;
  std::vector<data::DictEntry> dev_;
  data::Vocabulary vocab_;
  TrainerState state_;
  std::vector<numerics::Tensor> params_;
  double started_at_ = 0.0;
};

/// Convenience wrapper: trains to completion and returns the best model.
struct TrainResult {
  UnifiedModel best;
  TrainHistory history;
};
TrainResult train(const UnifiedModel& model, const std::vector<data::DictEntry>& train_set,
                  const std::vector<data::DictEntry>& dev_set, const data::Vocabulary& vocab,
                  const TrainConfig& config);

struct AblationRun {
  TaskPreset preset;
  TrainHistory history;
};

/// One model per preset, all starting from the same initialization.
std::vector<AblationRun> run_ablation(const std::vector<data::DictEntry>& train_set,
                                      const std::vector<data::DictEntry>& dev_set, const data::Vocabulary& vocab,
                                      const model::ModelConfig& model_config, const TrainConfig& train_config,
                                      const std::vector<TaskPreset>& presets);

/// Plot-ready table: preset, epoch, monitored dev loss, then dev loss per path.
std::string ablation_tsv(const std::vector<AblationRun>& runs);

std::string format_double(double v);

}  // namespace neurodict::training
