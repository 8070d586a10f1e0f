// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace neurodict::cli {

inline constexpr double kGradTolerance = 1e-4;

struct GradSuiteOptions {
  double eps = 1e-5;
  std::uint64_t seed = 1;
  /// Name of a check whose gradient gets a deliberate error (test hook).
  std::string inject_fault;
};

struct GradSuiteEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  bool passed = false;
};

/// Names of every check, in report order: each differentiable primitive once,
/// then the full five-task forward pass (tied and untied).
std::vector<std::string> grad_suite_names();

/// Throws UsageError when inject_fault names no check.
std::vector<GradSuiteEntry> run_grad_suite(const GradSuiteOptions& options = {});

/// One line per check plus a summary line.
std::string format_grad_suite(const std::vector<GradSuiteEntry>& entries);

}  // namespace neurodict::cli
