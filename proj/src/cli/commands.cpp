// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#include "neurodict/cli/commands.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "neurodict/cli/config.hpp"
#include "neurodict/cli/grad_suite.hpp"
#include "neurodict/errors.hpp"
#include "neurodict/evalmetrics/evaluate.hpp"
#include "neurodict/training/checkpoint.hpp"

namespace neurodict::cli {
namespace fs = std::filesystem;
namespace {

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
  if (!f) throw DataError("failed writing " + path.string());
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> definitions_of(const std::vector<data::DictEntry>& entries) {
  std::vector<std::string> defs;
  defs.reserve(entries.size());
  for (const auto& e : entries) defs.push_back(data::definition_text(e));
  return defs;
}

data::Vocabulary make_vocab(const std::vector<std::string>& corpus, data::VocabKind kind, std::size_t size) {
  if (kind == data::VocabKind::whitespace) return data::build_whitespace_vocab(corpus);
  return data::train_unigram_vocab(corpus, size);
}

inference::BeamOptions beam_options(std::size_t beam, std::size_t max_len) {
  inference::BeamOptions o;
  o.beam_size = beam;
  o.max_len = max_len;
  return o;
}

std::string format_epoch(const training::HistoryRecord& r) {
  return "epoch " + std::to_string(r.epoch) + " step " + std::to_string(r.step) +
         " train " + training::format_double(r.train_total) + " dev " + training::format_double(r.dev_total);
}

// Interactive two-way lookup over one loaded checkpoint.
class QuerySession {
 public:
  QuerySession(training::Checkpoint ck, std::optional<data::EmbeddingTable> table, const QueryArgs& args)
      : ck_(std::move(ck)), table_(std::move(table)), args_(args) {
    if (table_ && table_->dim() != ck_.model.config().d_w) {
      throw DimensionError("candidate table has dimension " + std::to_string(table_->dim()) + ", model d_w is " +
                           std::to_string(ck_.model.config().d_w));
    }
  }

  // Response lines, each indented by two spaces.
  std::vector<std::string> handle(const std::string& line) {
    if (line.rfind(":w", 0) == 0 && (line.size() == 2 || line[2] == ' ')) return word_query(trim(line.substr(2)));
    if (line.rfind(":d", 0) == 0 && (line.size() == 2 || line[2] == ' ')) return definition_query(trim(line.substr(2)));
    return {"  unknown command; use :w <word>, :d <definition> or :q"};
  }

 private:
  std::vector<std::string> word_query(const std::string& word) {
    if (word.empty()) return {"  usage: :w <word>"};
    try {
      const auto text = inference::generate_definition(ck_.model, ck_.vocab, word, table_ ? &*table_ : nullptr,
                                                       beam_options(args_.beam_size, args_.max_len));
      return {"  " + text};
    } catch (const LookupMiss& e) {
      return {std::string("  miss: ") + e.what()};
    }
  }

  std::vector<std::string> definition_query(const std::string& text) {
    if (text.empty()) return {"  usage: :d <definition text>"};
    if (!table_) return {"  error: no candidate table loaded (pass --candidates)"};
    const auto tokens = data::split_whitespace(text);
    const auto r = inference::reverse_lookup(ck_.model, ck_.vocab, tokens, *table_);
    std::vector<std::string> lines;
    const std::size_t k = std::min(args_.top_k, r.ranking.size());
    for (std::size_t i = 0; i < k; ++i)
      lines.push_back("  " + std::to_string(i + 1) + "\t" + r.ranking[i].word + "\t" +
                      training::format_double(r.ranking[i].distance));
    return lines;
  }

  training::Checkpoint ck_;
  std::optional<data::EmbeddingTable> table_;
  QueryArgs args_;
};

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return kExitUsage;
  if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const DimensionError*>(&e) ||
      dynamic_cast<const LookupMiss*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e))
    return kExitData;
  return kExitInternal;
}

void cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  Settings settings;
  if (!args.config_path.empty()) settings.apply_file(args.config_path);
  for (const auto& o : args.overrides) settings.apply_override(o);
  RunConfig rc = resolve(settings);
  if (rc.train_path.empty()) throw UsageError("config key 'data.train' is required");
  if (rc.dev_path.empty()) throw UsageError("config key 'data.dev' is required");

  Manifest manifest;
  manifest.command = "train";
  manifest.seed = rc.train.seed;
  if (!args.config_path.empty()) manifest.inputs.push_back(args.config_path);
  manifest.inputs.push_back(rc.train_path);
  manifest.inputs.push_back(rc.dev_path);

  std::optional<data::EmbeddingTable> table;
  if (!rc.embeddings_path.empty()) {
    table = data::load_embeddings(rc.embeddings_path);
    manifest.inputs.push_back(rc.embeddings_path);
  }
  data::DatasetOptions dopts;
  if (rc.model.d_w != 0) dopts.dim = rc.model.d_w;
  if (table) dopts.dim = table->dim();
  dopts.lowercase = rc.lowercase;
  auto load = [&](const std::string& path, const char* what) {
    auto resolved = data::resolve_word_vectors(data::load_dataset(path, dopts), table ? &*table : nullptr);
    if (resolved.dropped > 0)
      err << "warning: dropped " << resolved.dropped << " " << what << " entries without a word vector\n";
    if (resolved.entries.empty()) throw DataError(path + ": no usable entries");
    return std::move(resolved.entries);
  };
  auto train_set = load(rc.train_path, "training");
  auto dev_set = load(rc.dev_path, "development");
  const std::size_t d_w = train_set.front().word_vector.size();
  if (rc.model.d_w != 0 && rc.model.d_w != d_w)
    throw DimensionError("model.d_w is " + std::to_string(rc.model.d_w) + " but the data has " + std::to_string(d_w));
  rc.model.d_w = d_w;
  settings.set("model.d_w", std::to_string(d_w));

  data::Vocabulary vocab;
  if (!rc.vocab_path.empty()) {
    vocab = data::load_vocab(rc.vocab_path);
    manifest.inputs.push_back(rc.vocab_path);
  } else {
    vocab = make_vocab(definitions_of(train_set), rc.vocab_kind, rc.vocab_size);
  }
  rc.model.vocab_size = vocab.size();
  rc.model.validate();

  const fs::path dir = rc.out_dir;
  fs::create_directories(dir);
  const fs::path vocab_out = dir / "vocab.txt";
  data::save_vocab(vocab_out, vocab);

  std::optional<training::Trainer> trainer;
  if (!args.resume.empty()) {
    auto ck = training::load_checkpoint(args.resume, &vocab);
    if (!ck.trainer) throw DataError(args.resume + ": checkpoint has no trainer state to resume");
    if (ck.model.config().d_w != d_w) throw DimensionError("resumed model d_w differs from the data");
    manifest.inputs.push_back(args.resume);
    trainer.emplace(training::resume_trainer(std::move(ck), train_set, dev_set));
    trainer->set_limits(rc.train.max_epochs, rc.train.patience);
  } else {
    trainer.emplace(training::UnifiedModel(rc.model, rc.train.seed), train_set, dev_set, vocab, rc.train);
    err << format_epoch(trainer->history().records.back()) << "\n";
  }

  const fs::path last = dir / "last.ckpt";
  while (!trainer->finished()) {
    trainer->step_epoch();
    err << format_epoch(trainer->history().records.back()) << "\n";
    training::save_trainer(last, *trainer);
  }
  training::save_trainer(last, *trainer);
  const fs::path best = dir / "best.ckpt";
  training::save_best(best, *trainer);
  const fs::path history = dir / "history.tsv";
  write_file(history, training::history_tsv(trainer->history()));
  manifest.outputs = {vocab_out, best, last, history};

  const auto& h = trainer->history();
  if (h.best_index) {
    const auto& r = h.records[*h.best_index];
    out << "best epoch " << r.epoch << " dev " << training::format_double(r.dev_total) << "\n";
  } else {
    out << "no training epochs ran\n";
  }

  if (!rc.ablation.empty()) {
    const auto runs = training::run_ablation(train_set, dev_set, vocab, rc.model, rc.train, rc.ablation);
    const fs::path abl = dir / "ablation.tsv";
    write_file(abl, training::ablation_tsv(runs));
    manifest.outputs.push_back(abl);
    out << "ablation: " << runs.size() << " presets written to " << abl.string() << "\n";
  }

  manifest.config = settings.to_json();
  manifest.config["model.vocab_size"] = vocab.size();
  manifest.config["model.parameter_count"] = trainer->model().parameter_count();
  const fs::path manifest_path = dir / "manifest.json";
  write_file(manifest_path, manifest.to_json());
  out << "wrote " << best.string() << ", " << history.string() << ", " << manifest_path.string() << "\n";
}

void cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  if (args.mode != "revdic" && args.mode != "defmod")
    throw UsageError("--mode must be revdic or defmod, got '" + args.mode + "'");
  if (args.mode == "revdic" && args.candidates.empty())
    throw UsageError("revdic evaluation needs a candidate table (--candidates)");
  auto ck = training::load_checkpoint(args.checkpoint);
  std::optional<data::EmbeddingTable> table;
  if (!args.candidates.empty()) table = data::load_embeddings(args.candidates);
  if (table && table->dim() != ck.model.config().d_w) {
    throw DimensionError("candidate table has dimension " + std::to_string(table->dim()) + ", model d_w is " +
                         std::to_string(ck.model.config().d_w));
  }
  data::DatasetOptions dopts;
  dopts.dim = ck.model.config().d_w;
  dopts.lowercase = args.lowercase;
  auto entries = data::load_dataset(args.test, dopts);
  if (entries.empty()) throw DataError(args.test + ": no test entries");

  Manifest manifest;
  manifest.command = "eval";
  manifest.inputs = {args.checkpoint, args.test};
  if (table) manifest.inputs.push_back(args.candidates);
  nlohmann::ordered_json cfg;
  cfg["mode"] = args.mode;
  cfg["beam_size"] = args.beam_size;
  cfg["max_len"] = args.max_len;
  cfg["lowercase"] = args.lowercase;
  manifest.config = cfg;

  const fs::path dir = args.out_dir;
  fs::create_directories(dir);
  if (args.mode == "revdic") {
    const auto ev = evalmetrics::evaluate_revdic(ck.model, ck.vocab, entries, *table);
    std::string ranks = "word\trank\n";
    for (std::size_t i = 0; i < entries.size(); ++i) ranks += entries[i].word + "\t" + std::to_string(ev.ranks[i]) + "\n";
    const std::string table_text = evalmetrics::format_retrieval_table(ev.report);
    write_file(dir / "revdic_report.txt", table_text);
    write_file(dir / "revdic_report.json", evalmetrics::retrieval_json(ev.report));
    write_file(dir / "revdic_ranks.tsv", ranks);
    manifest.outputs = {dir / "revdic_report.txt", dir / "revdic_report.json", dir / "revdic_ranks.tsv"};
    out << table_text;
  } else {
    auto resolved = data::resolve_word_vectors(std::move(entries), table ? &*table : nullptr);
    if (resolved.dropped > 0) err << "warning: dropped " << resolved.dropped << " entries without a word vector\n";
    if (resolved.entries.empty()) throw DataError(args.test + ": no entries with a word vector");
    const auto ev = evalmetrics::evaluate_defmod(ck.model, ck.vocab, resolved.entries,
                                                 beam_options(args.beam_size, args.max_len));
    std::string gens = "word\tgeneration\treference\n";
    for (std::size_t i = 0; i < resolved.entries.size(); ++i)
      gens += resolved.entries[i].word + "\t" + ev.generations[i] + "\t" + data::definition_text(resolved.entries[i]) +
              "\n";
    const std::string table_text = evalmetrics::format_generation_table(ev.report);
    write_file(dir / "defmod_report.txt", table_text);
    write_file(dir / "defmod_report.json", evalmetrics::generation_json(ev.report));
    write_file(dir / "defmod_generations.tsv", gens);
    manifest.outputs = {dir / "defmod_report.txt", dir / "defmod_report.json", dir / "defmod_generations.tsv"};
    out << table_text;
  }
  write_file(dir / "manifest.json", manifest.to_json());
}

void cmd_query(const QueryArgs& args, std::istream& in, std::ostream& out, std::ostream& err) {
  if (args.top_k < 1) throw UsageError("--top-k must be at least 1");
  auto ck = training::load_checkpoint(args.checkpoint);
  std::optional<data::EmbeddingTable> table;
  if (!args.candidates.empty()) table = data::load_embeddings(args.candidates);
  QuerySession session(std::move(ck), std::move(table), args);

  std::ofstream transcript;
  if (!args.transcript.empty()) {
    transcript.open(args.transcript, std::ios::app);
    if (!transcript) throw DataError("cannot open transcript " + args.transcript);
  }
  std::ifstream replay;
  if (!args.replay.empty()) {
    replay.open(args.replay);
    if (!replay) throw DataError("cannot open " + args.replay);
  }
  std::istream& src = args.replay.empty() ? in : replay;
  if (args.replay.empty()) err << "commands: :w <word>, :d <definition>, :q\n";

  for (std::string raw; std::getline(src, raw);) {
    std::string line = raw;
    if (!args.replay.empty()) {
      if (line.rfind("> ", 0) != 0) continue;
      line = line.substr(2);
    }
    line = trim(line);
    if (line.empty()) continue;
    if (transcript.is_open()) transcript << "> " << line << "\n";
    if (line == ":q") break;
    for (const auto& r : session.handle(line)) {
      out << r << "\n";
      if (transcript.is_open()) transcript << r << "\n";
    }
    out.flush();
  }
}

void cmd_build_vocab(const BuildVocabArgs& args, std::ostream& out, std::ostream& err) {
  const auto kind = data::parse_vocab_kind(args.kind);
  if (args.out.empty()) throw UsageError("--out is required");
  std::vector<std::string> corpus;
  if (args.format == "jsonl") {
    data::DatasetOptions dopts;
    dopts.lowercase = args.lowercase;
    corpus = definitions_of(data::load_dataset(args.corpus, dopts));
  } else if (args.format == "text") {
    std::ifstream f(args.corpus);
    if (!f) throw DataError("cannot open " + args.corpus);
    for (std::string line; std::getline(f, line);) {
      line = trim(line);
      if (line.empty()) continue;
      if (args.lowercase)
        for (char& c : line) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      corpus.push_back(line);
    }
  } else {
    throw UsageError("--format must be jsonl or text, got '" + args.format + "'");
  }
  if (corpus.empty()) throw DataError(args.corpus + ": corpus is empty");
  if (kind == data::VocabKind::whitespace && args.size)
    err << "warning: --size is ignored for whitespace vocabularies\n";
  if (kind == data::VocabKind::unigram && !args.size) throw UsageError("unigram vocabularies need --size");
  const auto vocab = make_vocab(corpus, kind, args.size.value_or(0));
  data::save_vocab(args.out, vocab);
  out << "wrote " << vocab.size() << " ids (" << data::vocab_kind_name(kind) << ") to " << args.out << "\n";
}

void cmd_grad_check(const GradCheckArgs& args, std::ostream& out) {
  GradSuiteOptions opts;
  opts.eps = args.eps;
  opts.seed = args.seed;
  opts.inject_fault = args.inject_fault;
  const auto entries = run_grad_suite(opts);
  out << format_grad_suite(entries);
  std::string failed;
  for (const auto& e : entries)
    if (!e.passed) failed += (failed.empty() ? "" : ", ") + e.name;
  if (!failed.empty()) throw NumericalError("gradient check failed: " + failed);
}

int run_cli(std::vector<std::string> args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"neurodict: joint reverse dictionary and definition modelling"};
  app.name("neurodict");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "train a model from a config file");
  train_cmd->add_option("config", train.config_path, "key = value config file");
  train_cmd->add_option("--set", train.overrides, "override a config key (key=value); repeatable");
  train_cmd->add_option("--resume", train.resume, "continue from a last.ckpt");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a test set");
  eval_cmd->add_option("--checkpoint", eval.checkpoint)->required();
  eval_cmd->add_option("--test", eval.test, "test set (JSONL)")->required();
  eval_cmd->add_option("--mode", eval.mode, "revdic or defmod")->required();
  eval_cmd->add_option("--candidates", eval.candidates, "embedding table of candidate words");
  eval_cmd->add_option("--out-dir", eval.out_dir, "report directory")->capture_default_str();
  eval_cmd->add_option("--beam", eval.beam_size)->capture_default_str();
  eval_cmd->add_option("--max-len", eval.max_len)->capture_default_str();
  eval_cmd->add_flag("--lowercase", eval.lowercase);

  QueryArgs query;
  auto* query_cmd = app.add_subcommand("query", "interactive word <-> definition lookup");
  query_cmd->add_option("--checkpoint", query.checkpoint)->required();
  query_cmd->add_option("--candidates", query.candidates, "embedding table for :d and :w");
  query_cmd->add_option("--top-k", query.top_k)->capture_default_str();
  query_cmd->add_option("--transcript", query.transcript, "append the session to this file");
  query_cmd->add_option("--replay", query.replay, "run the queries of a transcript file");
  query_cmd->add_option("--beam", query.beam_size)->capture_default_str();
  query_cmd->add_option("--max-len", query.max_len)->capture_default_str();

  BuildVocabArgs bv;
  std::size_t bv_size = 0;
  auto* bv_cmd = app.add_subcommand("build-vocab", "build a vocabulary file");
  bv_cmd->add_option("--corpus", bv.corpus)->required();
  bv_cmd->add_option("--format", bv.format, "jsonl or text")->capture_default_str();
  bv_cmd->add_option("--kind", bv.kind, "unigram or whitespace")->capture_default_str();
  auto* size_opt = bv_cmd->add_option("--size", bv_size, "unigram vocabulary size");
  bv_cmd->add_option("--out", bv.out)->required();
  bv_cmd->add_flag("--lowercase", bv.lowercase);

  GradCheckArgs gc;
  auto* gc_cmd = app.add_subcommand("grad-check", "finite-difference check of every differentiable op");
  gc_cmd->add_option("--eps", gc.eps)->capture_default_str();
  gc_cmd->add_option("--seed", gc.seed)->capture_default_str();
  gc_cmd->add_option("--inject-fault", gc.inject_fault)->group("");  // hidden test hook

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) cmd_train(train, out, err);
    if (*eval_cmd) cmd_eval(eval, out, err);
    if (*query_cmd) cmd_query(query, in, out, err);
    if (*bv_cmd) {
      if (*size_opt) bv.size = bv_size;
      cmd_build_vocab(bv, out, err);
    }
    if (*gc_cmd) cmd_grad_check(gc, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitOk;
}

}  // namespace neurodict::cli
