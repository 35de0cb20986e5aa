// Copyright 2026 The ssir Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssir/cli.hpp"

int main(int argc, char** argv) { return ssir::cli::run(argc, argv); }
