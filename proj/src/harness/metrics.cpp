// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/harness/metrics.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cyc/errors.hpp"

namespace cyc {

namespace {

constexpr std::string_view kHeader = "step,phase,loss,reward_mean,released_frac,dev_ter,dev_nll";

void append_field(std::string& out, double v) {
  out += ',';
  if (std::isnan(v)) return;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  out += buf;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      parts.push_back(line.substr(start));
      return parts;
    }
    parts.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_field(std::string_view s, std::size_t line_no) {
  if (s.empty()) return kMissing;
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) {
    throw FormatError("bad number '" + std::string(s) + "' in metrics CSV", line_no);
  }
  return v;
}

}  // namespace

std::string_view metrics_header() { return kHeader; }

std::string format_row(const MetricsRow& row) {
  std::string out = std::to_string(row.step);
  out += ',';
  out += row.phase;
  append_field(out, row.loss);
  append_field(out, row.reward_mean);
  append_field(out, row.released_frac);
  append_field(out, row.dev_ter);
  append_field(out, row.dev_nll);
  return out;
}

std::string metrics_csv(std::span<const MetricsRow> rows) {
  std::string out(kHeader);
  out += '\n';
  for (const MetricsRow& r : rows) {
    out += format_row(r);
    out += '\n';
  }
  return out;
}

void write_metrics(const std::filesystem::path& path, std::span<const MetricsRow> rows) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  const std::string text = metrics_csv(rows);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

std::vector<MetricsRow> parse_metrics(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw FormatError("missing metrics header", 1);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw FormatError("unexpected metrics header", line_no);

  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto parts = split_commas(line);
    if (parts.size() != 7) {
      throw FormatError("expected 7 fields, found " + std::to_string(parts.size()), line_no);
    }
    MetricsRow r;
    const double step = parse_field(parts[0], line_no);
    if (std::isnan(step) || step < 0 || step != std::floor(step)) {
      throw FormatError("bad step field", line_no);
    }
    r.step = static_cast<std::size_t>(step);
    r.phase = std::string(parts[1]);
    if (r.phase.empty()) throw FormatError("empty phase field", line_no);
    r.loss = parse_field(parts[2], line_no);
    r.reward_mean = parse_field(parts[3], line_no);
    r.released_frac = parse_field(parts[4], line_no);
    r.dev_ter = parse_field(parts[5], line_no);
    r.dev_nll = parse_field(parts[6], line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace cyc
