// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cyc {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;    // bad flags or config
inline constexpr int kExitIo = 3;       // I/O or file format
inline constexpr int kExitNumeric = 4;  // training diverged

// Entry point of the `cycletrain` tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cyc
