// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "cyc/errors.hpp"

namespace cyc {

namespace {

constexpr double kWidth = 720, kHeight = 420;
constexpr double kLeft = 70, kRight = 70, kTop = 30, kBottom = 50;

struct Series {
  const char* label;
  const char* color;
  std::vector<std::pair<double, double>> points;
};

struct Range {
  double lo = 0.0, hi = 1.0;
  void fit(const std::vector<std::pair<double, double>>& pts, bool use_x) {
    if (pts.empty()) return;
    lo = hi = use_x ? pts.front().first : pts.front().second;
    for (const auto& [x, y] : pts) {
      const double v = use_x ? x : y;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
  double unit(double v) const { return (v - lo) / (hi - lo); }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

std::string render_svg(std::span<const MetricsRow> rows) {
  Series loss{"loss", "#1f77b4", {}};
  Series ter{"dev_ter", "#d62728", {}};
  for (const MetricsRow& r : rows) {
    if (r.phase == "train" && !std::isnan(r.loss)) loss.points.emplace_back(r.step, r.loss);
    if (r.phase == "eval" && !std::isnan(r.dev_ter)) ter.points.emplace_back(r.step, r.dev_ter);
  }

  std::vector<std::pair<double, double>> all = loss.points;
  all.insert(all.end(), ter.points.begin(), ter.points.end());
  Range xr;
  xr.fit(all, true);
  Range loss_r, ter_r;
  loss_r.fit(loss.points, false);
  ter_r.fit(ter.points, false);

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + xr.unit(x) * pw; };
  auto py = [&](const Range& r, double y) { return kTop + (1.0 - r.unit(y)) * ph; };

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
       num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
       "\" fill=\"white\"/>\n";

  // Axes: bottom (step), left (loss), right (dev_ter).
  s += "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n";
  s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + ph) + "\" x2=\"" + num(kLeft + pw) +
       "\" y2=\"" + num(kTop + ph) + "\"/>\n";
  s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" +
       num(kTop + ph) + "\"/>\n";
  s += "<line x1=\"" + num(kLeft + pw) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft + pw) +
       "\" y2=\"" + num(kTop + ph) + "\"/>\n";
  s += "</g>\n";

  s += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double f = i / 4.0;
    const double x = kLeft + f * pw, y = kTop + (1.0 - f) * ph;
    s += "<text x=\"" + num(x) + "\" y=\"" + num(kTop + ph + 16) + "\" text-anchor=\"middle\">" +
         tick(xr.lo + f * (xr.hi - xr.lo)) + "</text>\n";
    s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" +
         tick(loss_r.lo + f * (loss_r.hi - loss_r.lo)) + "</text>\n";
    s += "<text x=\"" + num(kLeft + pw + 6) + "\" y=\"" + num(y + 4) + "\">" +
         tick(ter_r.lo + f * (ter_r.hi - ter_r.lo)) + "</text>\n";
  }
  s += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 10) +
       "\" text-anchor=\"middle\">step</text>\n";
  s += "<text x=\"" + num(kLeft) + "\" y=\"" + num(kTop - 10) + "\" fill=\"" + loss.color +
       "\">loss</text>\n";
  s += "<text x=\"" + num(kLeft + pw) + "\" y=\"" + num(kTop - 10) + "\" fill=\"" + ter.color +
       "\" text-anchor=\"end\">dev_ter</text>\n";
  s += "</g>\n";

  for (const auto* series : {&loss, &ter}) {
    if (series->points.empty()) continue;
    const Range& yr = series == &loss ? loss_r : ter_r;
    s += "<polyline class=\"" + std::string(series->label) + "\" fill=\"none\" stroke=\"" +
         series->color + "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (const auto& [x, y] : series->points) {
      if (!first) s += ' ';
      first = false;
      s += num(px(x)) + "," + num(py(yr, y));
    }
    s += "\"/>\n";
  }
  s += "</svg>\n";
  return s;
}

std::vector<MetricsRow> downsample(std::span<const MetricsRow> rows, std::size_t max_rows) {
  if (max_rows < 2) throw ContractError("downsample keeps at least 2 rows per phase");
  std::map<std::string, std::vector<std::size_t>> by_phase;
  for (std::size_t i = 0; i < rows.size(); ++i) by_phase[rows[i].phase].push_back(i);

  std::vector<std::uint8_t> keep(rows.size(), 0);
  for (const auto& [phase, idx] : by_phase) {
    if (idx.size() <= max_rows) {
      for (std::size_t i : idx) keep[i] = 1;
      continue;
    }
    for (std::size_t k = 0; k < max_rows; ++k) {
      const std::size_t j = k * (idx.size() - 1) / (max_rows - 1);
      keep[idx[j]] = 1;
    }
  }
  std::vector<MetricsRow> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (keep[i]) out.push_back(rows[i]);
  }
  return out;
}

}  // namespace cyc
