// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

// Run configuration, read from JSON. Every section and key is optional and
// falls back to the defaults below; unknown keys are rejected with a
// ConfigError naming the full key path.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "cyc/anneal/schedule.hpp"
#include "cyc/cycle/losses.hpp"
#include "cyc/data/augment.hpp"
#include "cyc/data/corpus.hpp"
#include "cyc/models/asr.hpp"
#include "cyc/models/lm.hpp"
#include "cyc/models/tts.hpp"

namespace cyc {

enum class TrainMode { kBaseline, kSo, kTo, kSt };
enum class OptimizerKind { kAdadelta, kSgd };

TrainMode parse_train_mode(std::string_view s);  // ConfigError
std::string_view to_string(TrainMode m);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdadelta;
  double rho = 0.95;
  double eps = 1e-6;
  double lr = 1.0;
  double clip_norm = 5.0;  // <= 0 disables clipping
};

struct ScheduleConfig {
  bool enabled = true;  // false: every supervised sample is always released
  ScheduleKind kind = ScheduleKind::kExp;
  bool gamma_literal = false;
  ReleaseDirection direction = ReleaseDirection::kBelowThreshold;
};

struct AugmentConfig {
  bool enabled = false;
  std::size_t f_width = 2;
  std::size_t t_width = 6;
  MaskFill fill = MaskFill::kUtteranceMean;
};

struct PretrainConfig {
  std::size_t asr_steps = 1500;
  std::size_t tts_steps = 2000;
  std::size_t lm_steps = 1000;
  std::size_t batch_size = 20;
  std::string asr_split = "paired";
  std::string tts_split = "paired";
  std::size_t log_interval = 50;
  std::size_t eval_interval = 500;
};

struct TrainConfig {
  TrainMode mode = TrainMode::kSt;
  std::size_t total_steps = 5000;
  std::size_t batch_size = 20;        // supervised pairs per step
  std::size_t unsup_batch_size = 20;  // utterances per unpaired step, per pipeline
  std::size_t eval_interval = 200;
  std::size_t log_interval = 50;
  bool interleave = false;
  std::string sup_split = "paired";
  std::string so_split = "speech_only";
  std::string to_split = "text_only";
  std::string dev_split = "dev";
  std::size_t eval_max_len = 20;
};

struct AppConfig {
  std::uint64_t seed = 1;
  std::string manifest;  // path to the corpus manifest
  CorpusConfig corpus;
  AsrConfig asr;
  TtsConfig tts;
  LmConfig lm;
  OptimizerConfig optimizer;
  PretrainConfig pretrain;
  TrainConfig train;
  CycleConfig cycle;
  ScheduleConfig schedule;
  AugmentConfig augment;

  // Pushes the seed, vocabulary and feature size down into the parts.
  void finalize();
  void validate() const;  // ConfigError
};

AppConfig parse_config(const nlohmann::json& j);
AppConfig load_config(const std::filesystem::path& path);  // IoError, ConfigError
nlohmann::json to_json(const AppConfig& cfg);
std::uint64_t config_hash(const AppConfig& cfg);

}  // namespace cyc
