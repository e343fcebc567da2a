// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

// Confidence gate for supervised samples.
//
// A release level eta_t in [0, 1] rises over the T training steps along one
// of three curves, and maps to a threshold on the per-token confidence
//     gamma_t = eta_t (1 - 1/K) + 1/K
// which starts at chance level 1/K and ends at 1. By default a paired sample
// is used only while the model is still unsure of it (p_conf <= gamma_t), so
// already-memorised pairs are held back until late in training.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cyc/models/asr.hpp"

namespace cyc {

enum class ScheduleKind { kLog, kLinear, kExp };

enum class ReleaseDirection {
  kBelowThreshold,  // release when p_conf <= gamma_t
  kAboveThreshold,  // release when p_conf > gamma_t
};

struct Schedule {
  ScheduleKind kind = ScheduleKind::kExp;
  std::size_t total_steps = 1;
  int class_count = 2;
  // gamma_t = eta_t (1 - 1/K) + eta_t / K, which is just eta_t.
  bool gamma_literal = false;
  ReleaseDirection direction = ReleaseDirection::kBelowThreshold;

  void validate() const;
};

ScheduleKind parse_schedule_kind(std::string_view name);  // ConfigError if unknown
std::string_view to_string(ScheduleKind kind);

//   log    1 - exp(-5 t/T)
//   linear t/T
//   exp    exp(5 (t/T - 1))
double eta(const Schedule& s, std::size_t t);
double gamma(const Schedule& s, std::size_t t);
bool release(double p_conf, const Schedule& s, std::size_t t);

// exp(-NLL / (|y| + 1)): geometric-mean probability per token, EOS included,
// under teacher forcing on the reference.
std::vector<double> confidence(const AsrModel& asr, std::span<const FeatureSeq* const> xs,
                               std::span<const TokenSeq* const> ys);

struct Released {
  std::vector<std::size_t> index;  // positions in the input batch, ascending
  std::vector<double> p_conf;      // for every input pair
  double fraction() const {
    return p_conf.empty() ? 0.0
                          : static_cast<double>(index.size()) / static_cast<double>(p_conf.size());
  }
};

Released filter_supervised(const AsrModel& asr, std::span<const FeatureSeq* const> xs,
                           std::span<const TokenSeq* const> ys, const Schedule& s, std::size_t t);

}  // namespace cyc
