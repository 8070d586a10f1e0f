// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <exception>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace neurodict::cli {

enum ExitCode : int { kExitOk = 0, kExitInternal = 1, kExitUsage = 2, kExitData = 3, kExitNumerical = 4 };

/// Maps a library exception onto an exit-code class.
int exit_code_for(const std::exception& e);

struct TrainArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  /// Checkpoint with trainer state to continue from.
  std::string resume;
};
void cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);

struct EvalArgs {
  std::string checkpoint;
  std::string test;
  std::string mode;
  /// Candidate words for revdic; also fills missing word vectors for defmod.
  std::string candidates;
  std::string out_dir = "eval";
  std::size_t beam_size = 6;
  std::size_t max_len = 32;
  bool lowercase = false;
};
void cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);

struct QueryArgs {
  std::string checkpoint;
  std::string candidates;
  std::size_t top_k = 10;
  /// Responses are appended here too.
  std::string transcript;
  /// Reads queries from this file instead of the input stream. Lines of a
  /// transcript ("> " prefixed) are replayed; other lines are skipped.
  std::string replay;
  std::size_t beam_size = 6;
  std::size_t max_len = 32;
};
void cmd_query(const QueryArgs& args, std::istream& in, std::ostream& out, std::ostream& err);

struct BuildVocabArgs {
  std::string corpus;
  /// jsonl (dataset records) or text (one definition per line).
  std::string format = "jsonl";
  std::string kind = "unigram";
  std::optional<std::size_t> size;
  std::string out;
  bool lowercase = false;
};
void cmd_build_vocab(const BuildVocabArgs& args, std::ostream& out, std::ostream& err);

struct GradCheckArgs {
  double eps = 1e-5;
  std::uint64_t seed = 1;
  std::string inject_fault;
};
/// Throws NumericalError after printing the report when any check fails.
void cmd_grad_check(const GradCheckArgs& args, std::ostream& out);

/// Parses argv-style arguments (without the program name) and runs the
/// subcommand. Returns the process exit code; never throws.
int run_cli(std::vector<std::string> args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace neurodict::cli
