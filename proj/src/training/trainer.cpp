// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#include "neurodict/training/trainer.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "neurodict/data/batch.hpp"
#include "neurodict/errors.hpp"

namespace neurodict::training {
namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::vector<std::vector<double>> snapshot_params(const UnifiedModel& model) {
  std::vector<std::vector<double>> out;
  for (const auto& p : model.parameters()) out.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

const LossSet kEveryLoss{model::kAllLosses.begin(), model::kAllLosses.end()};

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string_view preset_name(TaskPreset preset) {
  switch (preset) {
    case TaskPreset::revdic_only: return "1-task-revdic";
    case TaskPreset::defmod_only: return "1-task-defmod";
    case TaskPreset::three_task: return "3-task";
    case TaskPreset::five_task: return "5-task";
    case TaskPreset::custom: return "custom";
  }
  return "custom";
}

TaskPreset parse_preset(std::string_view name) {
  for (TaskPreset p : {TaskPreset::revdic_only, TaskPreset::defmod_only, TaskPreset::three_task,
                       TaskPreset::five_task, TaskPreset::custom}) {
    if (preset_name(p) == name) return p;
  }
  throw UsageError("unknown task preset '" + std::string(name) +
                   "' (expected 1-task-revdic, 1-task-defmod, 3-task, 5-task or custom)");
}

LossSet preset_losses(TaskPreset preset) {
  switch (preset) {
    case TaskPreset::revdic_only: return {LossKind::revdic};
    case TaskPreset::defmod_only: return {LossKind::defmod};
    case TaskPreset::three_task: return {LossKind::revdic, LossKind::defmod, LossKind::sim};
    case TaskPreset::five_task: return kEveryLoss;
    case TaskPreset::custom: break;
  }
  throw UsageError("the custom preset has no fixed loss set");
}

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw UsageError("train.lr must be a non-negative number");
  if (!(weight_decay >= 0.0)) throw UsageError("train.weight_decay must be non-negative");
  if (batch_size < 1) throw UsageError("train.batch_size must be at least 1");
  if (patience < 1) throw UsageError("train.patience must be at least 1");
  if (preset == TaskPreset::custom && custom_losses.empty()) {
    throw UsageError("train.losses must name at least one loss for the custom preset");
  }
}

LossSet TrainConfig::active_losses() const { return preset == TaskPreset::custom ? custom_losses : preset_losses(preset); }

double active_total(const LossValues& values, const LossSet& active) {
  double total = 0.0;
  for (LossKind k : active) total += values[static_cast<std::size_t>(k)];
  return total;
}

LossValues validate(UnifiedModel& model, const std::vector<data::DictEntry>& entries, const data::Vocabulary& vocab,
                    std::size_t batch_size) {
  if (entries.empty()) throw UsageError("cannot validate on an empty set");
  const bool was_training = model.training();
  const LossSet active = model.config().active_losses;
  model.set_training(false);
  model.set_active_losses(kEveryLoss);
  numerics::NoGradGuard no_grad;
  LossValues sums{};
  std::size_t batches = 0;
  for (const auto& batch : data::make_batches(entries, vocab, batch_size, std::nullopt)) {
    const auto losses = model.forward_losses(batch);
    for (LossKind k : model::kAllLosses) sums[static_cast<std::size_t>(k)] += losses.value(k);
    ++batches;
  }
  for (double& s : sums) s /= static_cast<double>(batches);
  model.set_active_losses(active);
  model.set_training(was_training);
  return sums;
}

std::string history_tsv(const TrainHistory& history) {
  std::ostringstream out;
  out << "epoch\tstep\ttrain_total\tdev_total";
  for (const char* split : {"train", "dev"})
    for (LossKind k : model::kAllLosses) out << '\t' << split << '_' << model::loss_name(k);
  out << '\n';
  for (const auto& r : history.records) {
    out << r.epoch << '\t' << r.step << '\t' << format_double(r.train_total) << '\t' << format_double(r.dev_total);
    for (const LossValues* v : {&r.train, &r.dev})
      for (double x : *v) out << '\t' << format_double(x);
    out << '\n';
  }
  return out.str();
}

Trainer::Trainer(UnifiedModel model, std::vector<data::DictEntry> train, std::vector<data::DictEntry> dev,
                 data::Vocabulary vocab, TrainConfig config)
    : model_(std::move(model)), train_(std::move(train)), dev_(std::move(dev)), vocab_(std::move(vocab)) {
  config.validate();
  if (train_.empty()) throw UsageError("training set is empty");
  if (dev_.empty()) throw UsageError("development set is empty");
  state_.config = config;
  state_.adam.config.lr = config.lr;
  state_.adam.config.weight_decay = config.weight_decay;
  state_.history.active_losses = config.active_losses();
  state_.best_dev = std::numeric_limits<double>::infinity();
  model_.set_active_losses(state_.history.active_losses);
  params_ = model_.parameter_tensors();
  started_at_ = now_seconds();

  // Epoch 0: the untrained reference point.
  HistoryRecord rec;
  rec.dev = validate(model_, dev_, vocab_, config.batch_size);
  rec.train = validate(model_, train_, vocab_, config.batch_size);
  rec.dev_total = active_total(rec.dev, state_.history.active_losses);
  rec.train_total = active_total(rec.train, state_.history.active_losses);
  state_.history.records.push_back(rec);
  if (config.max_epochs == 0) state_.finished = true;
}

Trainer::Trainer(UnifiedModel model, std::vector<data::DictEntry> train, std::vector<data::DictEntry> dev,
                 data::Vocabulary vocab, TrainerState state)
    : model_(std::move(model)),
      train_(std::move(train)),
      dev_(std::move(dev)),
      vocab_(std::move(vocab)),
      state_(std::move(state)) {
  state_.config.validate();
  if (train_.empty() || dev_.empty()) throw UsageError("training and development sets must be non-empty");
  model_.set_active_losses(state_.history.active_losses);
  params_ = model_.parameter_tensors();
  if (!state_.best_params.empty() && state_.best_params.size() != params_.size()) {
    throw DataError("saved best parameters do not match the model");
  }
  started_at_ = now_seconds();
}

void Trainer::set_limits(std::size_t max_epochs, std::size_t patience) {
  if (patience < 1) throw UsageError("train.patience must be at least 1");
  state_.config.max_epochs = max_epochs;
  state_.config.patience = patience;
  state_.finished = state_.epoch >= max_epochs || state_.bad_validations >= patience;
}

void Trainer::check_finite(const model::LossBundle& losses) const {
  if (std::isfinite(losses.total.item())) return;
  std::string detail;
  for (LossKind k : model::kAllLosses) {
    if (!losses.has(k)) continue;
    detail += ' ' + std::string(model::loss_name(k)) + '=' + format_double(losses.value(k));
  }
  throw NumericalError("training diverged at epoch " + std::to_string(state_.epoch) + ", step " +
                       std::to_string(state_.step) + ":" + detail);
}

void Trainer::validate_and_track() {
  const auto& cfg = state_.config;
  HistoryRecord rec;
  rec.epoch = state_.epoch;
  rec.step = state_.step;
  rec.dev = validate(model_, dev_, vocab_, cfg.batch_size);
  rec.train = validate(model_, train_, vocab_, cfg.batch_size);
  rec.dev_total = active_total(rec.dev, state_.history.active_losses);
  rec.train_total = active_total(rec.train, state_.history.active_losses);
  rec.wall_seconds = now_seconds() - started_at_;
  if (!std::isfinite(rec.dev_total)) {
    throw NumericalError("validation loss is not finite at epoch " + std::to_string(state_.epoch));
  }
  state_.history.records.push_back(rec);
  if (rec.dev_total < state_.best_dev) {
    state_.best_dev = rec.dev_total;
    state_.best_params = snapshot_params(model_);
    state_.history.best_index = state_.history.records.size() - 1;
    state_.bad_validations = 0;
  } else if (++state_.bad_validations >= cfg.patience) {
    state_.finished = true;
    state_.history.stopped_early = true;
  }
}

bool Trainer::step_epoch() {
  if (state_.finished) return false;
  const auto& cfg = state_.config;
  ++state_.epoch;
  model_.set_training(true);
  for (const auto& batch : data::make_batches(train_, vocab_, cfg.batch_size, cfg.seed + state_.epoch)) {
    numerics::zero_grads(params_);
    const auto losses = model_.forward_losses(batch);
    check_finite(losses);
    losses.total.backward();
    numerics::adam_step(params_, state_.adam);
    ++state_.step;
    if (cfg.validate_every > 0 && state_.step % cfg.validate_every == 0) {
      validate_and_track();
      if (state_.finished) break;
    }
  }
  numerics::zero_grads(params_);
  if (cfg.validate_every == 0) validate_and_track();
  if (state_.epoch >= cfg.max_epochs) state_.finished = true;
  return !state_.finished;
}

void Trainer::run() {
  while (step_epoch()) {
  }
}

UnifiedModel Trainer::best_model() const {
  UnifiedModel best = model_.clone();
  if (!state_.best_params.empty()) {
    auto& params = best.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      std::copy(state_.best_params[i].begin(), state_.best_params[i].end(), params[i].tensor.data().begin());
    }
  }
  best.set_training(false);
  return best;
}

TrainResult train(const UnifiedModel& model, const std::vector<data::DictEntry>& train_set,
                  const std::vector<data::DictEntry>& dev_set, const data::Vocabulary& vocab,
                  const TrainConfig& config) {
  Trainer trainer(model.clone(), train_set, dev_set, vocab, config);
  trainer.run();
  return {trainer.best_model(), trainer.history()};
}

std::vector<AblationRun> run_ablation(const std::vector<data::DictEntry>& train_set,
                                      const std::vector<data::DictEntry>& dev_set, const data::Vocabulary& vocab,
                                      const model::ModelConfig& model_config, const TrainConfig& train_config,
                                      const std::vector<TaskPreset>& presets) {
  const UnifiedModel init(model_config, train_config.seed);
  std::vector<AblationRun> runs;
  for (TaskPreset preset : presets) {
    if (preset == TaskPreset::custom) throw UsageError("ablation presets must be fixed presets");
    TrainConfig cfg = train_config;
    cfg.preset = preset;
    Trainer trainer(init.clone(), train_set, dev_set, vocab, cfg);
    trainer.run();
    runs.push_back({preset, trainer.history()});
  }
  return runs;
}

std::string ablation_tsv(const std::vector<AblationRun>& runs) {
  std::ostringstream out;
  out << "preset\tepoch\tmonitored_dev";
  for (LossKind k : model::kAllLosses) out << "\tdev_" << model::loss_name(k);
  out << '\n';
  for (const auto& run : runs) {
    for (const auto& r : run.history.records) {
      out << preset_name(run.preset) << '\t' << r.epoch << '\t' << format_double(r.dev_total);
      for (double x : r.dev) out << '\t' << format_double(x);
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace neurodict::training
