// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace cyc {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

// One line of the metrics CSV. NaN fields are written empty.
struct MetricsRow {
  std::size_t step = 0;
  std::string phase;  // "train" or "eval"
  double loss = kMissing;
  double reward_mean = kMissing;
  double released_frac = kMissing;
  double dev_ter = kMissing;
  double dev_nll = kMissing;
};

std::string_view metrics_header();
std::string format_row(const MetricsRow& row);
std::string metrics_csv(std::span<const MetricsRow> rows);
void write_metrics(const std::filesystem::path& path, std::span<const MetricsRow> rows);  // IoError
// FormatError carries the 1-based line number as its offset.
std::vector<MetricsRow> parse_metrics(const std::string& text);

}  // namespace cyc
