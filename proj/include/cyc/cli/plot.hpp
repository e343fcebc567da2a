// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cyc/harness/metrics.hpp"

namespace cyc {

// Training loss (from "train" rows) and dev TER (from "eval" rows) against
// step, each on its own vertical scale. One polyline per non-empty series.
std::string render_svg(std::span<const MetricsRow> rows);

// Keeps at most `max_rows` rows per phase, evenly spaced, always including
// the first and last row of each phase. Order is preserved. max_rows >= 2.
std::vector<MetricsRow> downsample(std::span<const MetricsRow> rows, std::size_t max_rows);

}  // namespace cyc
