// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/log.hpp"

#include <cstdio>
#include <mutex>

namespace cyc {

namespace {

const char* label(LogLevel level) {
  switch (level) {
    case LogLevel::kDebug: return "debug";
    case LogLevel::kInfo: return "info";
    case LogLevel::kWarn: return "warn";
    case LogLevel::kError: return "error";
  }
  return "?";
}

void stderr_sink(LogLevel level, std::string_view message) {
  std::fprintf(stderr, "[%s] %.*s\n", label(level), static_cast<int>(message.size()),
               message.data());
}

std::mutex mu;
LogSink sink = stderr_sink;
LogLevel threshold = LogLevel::kInfo;

}  // namespace

LogSink set_log_sink(LogSink next) {
  std::lock_guard lock(mu);
  LogSink prev = std::move(sink);
  sink = next ? std::move(next) : LogSink(stderr_sink);
  return prev;
}

void set_log_level(LogLevel min_level) {
  std::lock_guard lock(mu);
  threshold = min_level;
}

void log(LogLevel level, std::string_view message) {
  std::lock_guard lock(mu);
  if (level < threshold) return;
  sink(level, message);
}

}  // namespace cyc
