// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/anneal/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "cyc/errors.hpp"

namespace cyc {

void Schedule::validate() const {
  if (total_steps < 1) throw ContractError("schedule horizon must be at least 1 step");
  if (class_count < 2) throw ContractError("schedule class count must be at least 2");
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "log") return ScheduleKind::kLog;
  if (name == "linear") return ScheduleKind::kLinear;
  if (name == "exp") return ScheduleKind::kExp;
  throw ConfigError("unknown schedule kind '" + std::string(name) + "' (log, linear, exp)");
}

std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kLog: return "log";
    case ScheduleKind::kLinear: return "linear";
    case ScheduleKind::kExp: return "exp";
  }
  return "?";
}

double eta(const Schedule& s, std::size_t t) {
  s.validate();
  if (t > s.total_steps) {
    throw ContractError("step " + std::to_string(t) + " beyond schedule horizon " +
                        std::to_string(s.total_steps));
  }
  const double frac = static_cast<double>(t) / static_cast<double>(s.total_steps);
  double v = 0.0;
  switch (s.kind) {
    case ScheduleKind::kLog: v = 1.0 - std::exp(-5.0 * frac); break;
    case ScheduleKind::kLinear: v = frac; break;
    case ScheduleKind::kExp: v = std::exp(5.0 * (frac - 1.0)); break;
  }
  return std::clamp(v, 0.0, 1.0);
}

double gamma(const Schedule& s, std::size_t t) {
  const double e = eta(s, t);
  const double inv_k = 1.0 / static_cast<double>(s.class_count);
  return s.gamma_literal ? e * (1.0 - inv_k) + e * inv_k : e * (1.0 - inv_k) + inv_k;
}

bool release(double p_conf, const Schedule& s, std::size_t t) {
  const double g = gamma(s, t);
  return s.direction == ReleaseDirection::kBelowThreshold ? p_conf <= g : p_conf > g;
}

std::vector<double> confidence(const AsrModel& asr, std::span<const FeatureSeq* const> xs,
                               std::span<const TokenSeq* const> ys) {
  if (xs.empty()) return {};
  ad::NoGradGuard ng;
  const ad::Tensor nll = asr.nll_batch(xs, ys, std::nullopt).value();
  std::vector<double> p(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) {
    p[i] = std::exp(-nll[i] / static_cast<double>(ys[i]->size() + 1));
  }
  return p;
}

Released filter_supervised(const AsrModel& asr, std::span<const FeatureSeq* const> xs,
                           std::span<const TokenSeq* const> ys, const Schedule& s, std::size_t t) {
  Released r;
  r.p_conf = confidence(asr, xs, ys);
  for (std::size_t i = 0; i < r.p_conf.size(); ++i) {
    if (release(r.p_conf[i], s, t)) r.index.push_back(i);
  }
  return r;
}

}  // namespace cyc
