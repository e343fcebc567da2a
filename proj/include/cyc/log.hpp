// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace cyc {

enum class LogLevel { kDebug, kInfo, kWarn, kError };

// Replaces the process-wide sink (default: stderr at kInfo and above).
// Returns the previous sink so callers can restore it.
using LogSink = std::function<void(LogLevel, std::string_view)>;
LogSink set_log_sink(LogSink sink);
void set_log_level(LogLevel min_level);

void log(LogLevel level, std::string_view message);
inline void log_info(std::string_view m) { log(LogLevel::kInfo, m); }
inline void log_warn(std::string_view m) { log(LogLevel::kWarn, m); }

}  // namespace cyc
