// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace ssir::cli {

// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInvalidFlags = 2,
  kIoError = 3,
  kFormatError = 4,
  kInfeasible = 5,
};

// Entry point of the `ssir` tool. Subcommands: gen, train, eval, decode,
// ablate, cross.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

std::string version();

}  // namespace ssir::cli
