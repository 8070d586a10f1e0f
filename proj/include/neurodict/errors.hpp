// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace neurodict {

/// Base for every error raised by the library. The CLI maps the concrete
/// subclass onto an exit-code class.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes or vector dimensions disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (dataset lines, embedding files,
/// vocabularies, checkpoints).
class DataError : public Error {
 public:
  using Error::Error;

  /// Builds "<source>:<line>: <what>".
  DataError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

/// Bad configuration or command-line usage.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf during training or a failed gradient check.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A word could not be resolved to a vector.
class LookupMiss : public Error {
 public:
  explicit LookupMiss(const std::string& word)
      : Error("no vector available for word '" + word + "'"), word_(word) {}

  const std::string& word() const noexcept { return word_; }

 private:
  std::string word_;
};

}  // namespace neurodict
