// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "neurodict/data/vocab.hpp"
#include "neurodict/errors.hpp"
#include "neurodict/training/checkpoint.hpp"
#include "neurodict/training/trainer.hpp"

using namespace neurodict;
using namespace neurodict::training;
using model::ModelConfig;

namespace {

ModelConfig small_config(std::size_t vocab_size) {
  ModelConfig c;
  c.d_w = 4;
  c.d_tok = 8;
  c.d_share = 6;
  c.d_ff = 16;
  c.depth = 1;
  c.heads = 2;
  c.dropout_transformer = 0.1;
  c.dropout_linear = 0.1;
  c.dropout_token = 0.0;
  c.vocab_size = vocab_size;
  return c;
}

struct Corpus {
  std::vector<data::DictEntry> train, dev;
  data::Vocabulary vocab;
};

Corpus make_corpus(std::size_t n = 8, std::uint64_t seed = 1) {
  Corpus c;
  const std::vector<std::string> words{"red", "blue", "cat", "dog", "run", "walk", "big", "small", "sun", "moon"};
  std::mt19937_64 rng(seed);
  std::vector<std::string> defs;
  for (std::size_t i = 0; i < n; ++i) {
    data::DictEntry e;
    e.word = "word" + std::to_string(i);
    const std::size_t len = 2 + rng() % 3;
    for (std::size_t j = 0; j < len; ++j) e.definition.push_back(words[rng() % words.size()]);
    for (int j = 0; j < 4; ++j) e.word_vector.push_back(2.0 * numerics::uniform01(rng) - 1.0);
    defs.push_back(data::definition_text(e));
    (i % 4 == 3 ? c.dev : c.train).push_back(e);
  }
  c.vocab = data::build_whitespace_vocab(defs);
  return c;
}

TrainConfig quick_config() {
  TrainConfig t;
  t.lr = 5e-3;
  t.batch_size = 3;
  t.max_epochs = 4;
  t.patience = 10;
  t.seed = 7;
  return t;
}

std::vector<std::vector<double>> param_values(const model::UnifiedModel& m) {
  std::vector<std::vector<double>> out;
  for (const auto& p : m.parameters()) out.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

}  // namespace

TEST_CASE("presets expand to their loss sets") {
  using model::LossKind;
  CHECK(preset_losses(TaskPreset::revdic_only) == model::LossSet{LossKind::revdic});
  CHECK(preset_losses(TaskPreset::defmod_only) == model::LossSet{LossKind::defmod});
  CHECK(preset_losses(TaskPreset::three_task) == model::LossSet{LossKind::revdic, LossKind::defmod, LossKind::sim});
  CHECK(preset_losses(TaskPreset::five_task).size() == 5);
  CHECK_THROWS_AS(preset_losses(TaskPreset::custom), UsageError);
  for (auto p : {TaskPreset::revdic_only, TaskPreset::defmod_only, TaskPreset::three_task, TaskPreset::five_task,
                 TaskPreset::custom})
    CHECK(parse_preset(preset_name(p)) == p);
  TrainConfig t;
  CHECK(t.lr == 1e-4);
  CHECK(t.patience == 5);
  t.patience = 0;
  CHECK_THROWS_AS(t.validate(), UsageError);
  t = TrainConfig{};
  t.preset = TaskPreset::custom;
  CHECK_THROWS_AS(t.validate(), UsageError);
  t.custom_losses = {LossKind::sim};
  CHECK(t.active_losses() == model::LossSet{LossKind::sim});
}

TEST_CASE("validation is deterministic and leaves the model in its mode") {
  auto c = make_corpus();
  model::UnifiedModel m(small_config(c.vocab.size()), 3);
  m.set_training(true);
  const auto a = validate(m, c.dev, c.vocab, 2);
  const auto b = validate(m, c.dev, c.vocab, 2);
  CHECK(a == b);
  CHECK(m.training());
  CHECK(m.config().active_losses.size() == 5);
  CHECK_THROWS_AS(validate(m, {}, c.vocab, 2), UsageError);
}

TEST_CASE("zero learning rate leaves parameters and losses unchanged") {
  auto c = make_corpus();
  model::UnifiedModel m(small_config(c.vocab.size()), 3);
  TrainConfig cfg = quick_config();
  cfg.lr = 0.0;
  cfg.max_epochs = 3;
  Trainer t(m.clone(), c.train, c.dev, c.vocab, cfg);
  t.run();
  CHECK(param_values(t.model()) == param_values(m));
  for (const auto& r : t.history().records) {
    CHECK(r.dev == t.history().records[0].dev);
    CHECK(r.train == t.history().records[0].train);
  }
}

TEST_CASE("early stopping keeps the best validation and stops after patience") {
  auto c = make_corpus(12);
  // Dev targets point away from the training targets, so fitting train makes
  // dev worse.
  auto dev = c.train;
  for (auto& e : dev)
    for (double& x : e.word_vector) x = -3.0 * x;
  ModelConfig mc = small_config(c.vocab.size());
  mc.dropout_linear = mc.dropout_transformer = 0.0;
  TrainConfig cfg = quick_config();
  cfg.preset = TaskPreset::revdic_only;
  cfg.patience = 1;
  cfg.max_epochs = 50;
  cfg.lr = 2e-2;
  const model::UnifiedModel init(mc, 5);
  Trainer t(init.clone(), c.train, dev, c.vocab, cfg);
  t.run();
  const auto& h = t.history();
  REQUIRE(h.best_index.has_value());
  CHECK(h.stopped_early);
  // Everything after the best record is non-improving, and exactly `patience` of them were tolerated.
  CHECK(h.records.size() == *h.best_index + 2);
  for (std::size_t i = *h.best_index + 1; i < h.records.size(); ++i)
    CHECK(h.records[i].dev_total >= h.records[*h.best_index].dev_total);
  CHECK(*h.best_index == 1);  // dev loss rises from epoch 1 onward
  CHECK(h.records.size() == 3);

  // The returned model is the epoch-1 model, not the last one.
  Trainer replay(init.clone(), c.train, dev, c.vocab, cfg);
  replay.step_epoch();
  CHECK(param_values(t.best_model()) == param_values(replay.model()));
  CHECK(param_values(t.best_model()) != param_values(t.model()));
}

TEST_CASE("excluded losses leave their path parameters untouched") {
  auto c = make_corpus();
  const model::UnifiedModel init(small_config(c.vocab.size()), 9);
  {
    TrainConfig cfg = quick_config();
    cfg.preset = TaskPreset::revdic_only;
    cfg.max_epochs = 1;
    Trainer t(init.clone(), c.train, c.dev, c.vocab, cfg);
    t.run();
    const auto before = init.decoder_stack_parameters();
    const auto after = t.model().decoder_stack_parameters();
    for (std::size_t i = 0; i < before.size(); ++i)
      CHECK(std::equal(before[i].data().begin(), before[i].data().end(), after[i].data().begin()));
  }
  {
    TrainConfig cfg = quick_config();
    cfg.preset = TaskPreset::defmod_only;
    cfg.max_epochs = 1;
    Trainer t(init.clone(), c.train, c.dev, c.vocab, cfg);
    t.run();
    const auto before = init.encoder_stack_parameters();
    const auto after = t.model().encoder_stack_parameters();
    for (std::size_t i = 0; i < before.size(); ++i)
      CHECK(std::equal(before[i].data().begin(), before[i].data().end(), after[i].data().begin()));
    CHECK(std::equal(init.find_parameter("l_out.w")->data().begin(), init.find_parameter("l_out.w")->data().end(),
                     t.model().find_parameter("l_out.w")->data().begin()));
  }
}

TEST_CASE("training reduces the training loss") {
  auto c = make_corpus(12);
  ModelConfig mc = small_config(c.vocab.size());
  TrainConfig cfg = quick_config();
  cfg.max_epochs = 30;
  Trainer t(model::UnifiedModel(mc, 2), c.train, c.dev, c.vocab, cfg);
  t.run();
  const auto& r = t.history().records;
  CHECK(r.back().train_total < 0.7 * r.front().train_total);
}

TEST_CASE("divergence raises a numerical error") {
  auto c = make_corpus();
  model::UnifiedModel m(small_config(c.vocab.size()), 3);
  TrainConfig cfg = quick_config();
  Trainer t(m.clone(), c.train, c.dev, c.vocab, cfg);
  auto* w = const_cast<numerics::Tensor*>(t.model().find_parameter("l_in.w"));
  w->data()[0] = std::nan("");
  CHECK_THROWS_AS(t.step_epoch(), NumericalError);
}

TEST_CASE("identical seeded runs give identical histories and checkpoints") {
  auto c = make_corpus();
  const ModelConfig mc = small_config(c.vocab.size());
  std::string bytes[2];
  TrainHistory hist[2];
  for (int i = 0; i < 2; ++i) {
    Trainer t(model::UnifiedModel(mc, 11), c.train, c.dev, c.vocab, quick_config());
    t.run();
    bytes[i] = serialize_checkpoint(t.model(), c.vocab, &t.state());
    hist[i] = t.history();
  }
  CHECK(bytes[0] == bytes[1]);
  CHECK(hist[0] == hist[1]);
  CHECK(history_tsv(hist[0]) == history_tsv(hist[1]));
}

TEST_CASE("checkpoint round trip is bit exact") {
  auto c = make_corpus();
  Trainer t(model::UnifiedModel(small_config(c.vocab.size()), 11), c.train, c.dev, c.vocab, quick_config());
  t.step_epoch();
  const std::string first = serialize_checkpoint(t.model(), c.vocab, &t.state());
  const auto loaded = deserialize_checkpoint(first);
  CHECK(serialize_checkpoint(loaded.model, loaded.vocab, loaded.trainer ? &*loaded.trainer : nullptr) == first);
  CHECK(param_values(loaded.model) == param_values(t.model()));
  REQUIRE(loaded.trainer.has_value());
  CHECK(*loaded.trainer == t.state());
  CHECK(loaded.vocab == c.vocab);

  const std::string plain = serialize_checkpoint(t.model(), c.vocab);
  CHECK_FALSE(deserialize_checkpoint(plain).trainer.has_value());
}

TEST_CASE("checkpoint errors: vocabulary mismatch, corruption, version") {
  auto c = make_corpus();
  model::UnifiedModel m(small_config(c.vocab.size()), 1);
  const std::string bytes = serialize_checkpoint(m, c.vocab);
  CHECK_NOTHROW(deserialize_checkpoint(bytes, "ck", &c.vocab));

  auto other_pieces = c.vocab.pieces();
  other_pieces.back() += "x";
  const data::Vocabulary other(data::VocabKind::whitespace, other_pieces);
  try {
    deserialize_checkpoint(bytes, "ck", &other);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("vocabulary hash mismatch") != std::string::npos);
  }

  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x01;
  CHECK_THROWS_AS(deserialize_checkpoint(flipped), DataError);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)), DataError);
  std::string versioned = bytes;
  versioned[8] = 9;
  try {
    deserialize_checkpoint(versioned);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }
  CHECK_THROWS_AS(deserialize_checkpoint("garbage"), DataError);
}

TEST_CASE("resuming from a checkpoint equals the uninterrupted run") {
  auto c = make_corpus();
  const ModelConfig mc = small_config(c.vocab.size());
  TrainConfig cfg = quick_config();
  cfg.max_epochs = 5;

  Trainer straight(model::UnifiedModel(mc, 13), c.train, c.dev, c.vocab, cfg);
  straight.run();

  Trainer first(model::UnifiedModel(mc, 13), c.train, c.dev, c.vocab, cfg);
  first.step_epoch();
  first.step_epoch();
  const std::string saved = serialize_checkpoint(first.model(), c.vocab, &first.state());
  Trainer resumed = resume_trainer(deserialize_checkpoint(saved), c.train, c.dev);
  resumed.run();

  CHECK(resumed.history() == straight.history());
  CHECK(serialize_checkpoint(resumed.model(), c.vocab, &resumed.state()) ==
        serialize_checkpoint(straight.model(), c.vocab, &straight.state()));
}

TEST_CASE("step-based validation cadence") {
  auto c = make_corpus();
  TrainConfig cfg = quick_config();
  cfg.validate_every = 1;
  cfg.max_epochs = 2;
  Trainer t(model::UnifiedModel(small_config(c.vocab.size()), 4), c.train, c.dev, c.vocab, cfg);
  t.run();
  // 6 training entries in batches of 3: two steps per epoch.
  CHECK(t.history().records.size() == 1 + 4);
  CHECK(t.history().records.back().step == 4);
}

TEST_CASE("history table has one row per validation") {
  auto c = make_corpus();
  Trainer t(model::UnifiedModel(small_config(c.vocab.size()), 4), c.train, c.dev, c.vocab, quick_config());
  t.run();
  const std::string tsv = history_tsv(t.history());
  std::istringstream in(tsv);
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("epoch\tstep\ttrain_total\tdev_total\ttrain_revdic", 0) == 0);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), '\t') == 13);
  }
  CHECK(rows == t.history().records.size());
}

TEST_CASE("ablation runs share initialization and emit comparable tables") {
  auto c = make_corpus();
  TrainConfig cfg = quick_config();
  cfg.max_epochs = 2;
  const std::vector<TaskPreset> presets{TaskPreset::revdic_only, TaskPreset::defmod_only, TaskPreset::three_task,
                                        TaskPreset::five_task};
  const auto runs = run_ablation(c.train, c.dev, c.vocab, small_config(c.vocab.size()), cfg, presets);
  REQUIRE(runs.size() == 4);
  for (const auto& r : runs) CHECK(r.history.records.front().dev == runs[0].history.records.front().dev);
  CHECK(runs[0].history.records.front().dev_total ==
        runs[0].history.records.front().dev[static_cast<std::size_t>(model::LossKind::revdic)]);
  CHECK(runs[1].history.records.front().dev_total ==
        runs[1].history.records.front().dev[static_cast<std::size_t>(model::LossKind::defmod)]);

  const std::string table = ablation_tsv(runs);
  std::size_t rows = static_cast<std::size_t>(std::count(table.begin(), table.end(), '\n')) - 1;
  std::size_t expected = 0;
  for (const auto& r : runs) expected += r.history.records.size();
  CHECK(rows == expected);
  CHECK(table.rfind("preset\tepoch\tmonitored_dev\tdev_revdic\tdev_defmod", 0) == 0);
}
