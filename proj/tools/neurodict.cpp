// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "neurodict/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return neurodict::cli::run_cli(std::move(args), std::cin, std::cout, std::cerr);
}
