// Copyright 2026 The ffconv-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>

namespace ffconv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;   // bad flags, unreadable files, invalid networks
inline constexpr int kExitVerify = 2;  // verification mismatch or corrupted weights under verify

// Entry point of the ffconv tool. Subcommands: run, plan, factorize,
// compare-packings, verify, report.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ffconv::cli
