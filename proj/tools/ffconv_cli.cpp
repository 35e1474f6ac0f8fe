// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "ffconv/cli/cli.h"

int main(int argc, char** argv) { return ffconv::cli::main(argc, argv, std::cout, std::cerr); }
