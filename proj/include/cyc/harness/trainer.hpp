// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "cyc/data/corpus.hpp"
#include "cyc/errors.hpp"
#include "cyc/harness/checkpoint.hpp"
#include "cyc/harness/config.hpp"
#include "cyc/harness/metrics.hpp"

namespace cyc {

enum class PretrainTarget { kAsr, kTts, kLm };

PretrainTarget parse_pretrain_target(std::string_view s);  // ConfigError
std::string_view to_string(PretrainTarget t);

// A loss or gradient went non-finite. Carries the parameters as they were
// before the failing step and the metrics logged so far.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, Checkpoint last_good, std::vector<MetricsRow> metrics)
      : NumericError(what), last_good_(std::move(last_good)), metrics_(std::move(metrics)) {}

  const Checkpoint& last_good() const { return last_good_; }
  const std::vector<MetricsRow>& metrics() const { return metrics_; }

 private:
  Checkpoint last_good_;
  std::vector<MetricsRow> metrics_;
};

struct RunResult {
  Checkpoint checkpoint;
  std::vector<MetricsRow> metrics;
};

// Epoch-wise shuffled mini-batches over [0, n), endlessly.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::size_t batch, std::uint64_t seed);
  std::vector<std::size_t> next();

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_;
  std::size_t pos_ = 0;
  Rng rng_;
};

// Trains one model from its initialization on its supervised objective.
//   asr: pretrain.asr_split pairs, evaluated on train.dev_split
//   tts: pretrain.tts_split pairs
//   lm:  text_only transcripts plus the paired transcripts
RunResult pretrain(PretrainTarget which, const AppConfig& cfg, const CorpusManifest& manifest);

struct CycleInputs {
  std::unique_ptr<AsrModel> asr;
  std::unique_ptr<TtsModel> tts;  // required by so, to, st
  std::unique_ptr<LmModel> lm;    // required by so, st
};

// Runs cfg.train.total_steps steps of cfg.train.mode. Each step sums the
// unpaired loss of the mode with the supervised loss of the released part of
// a paired batch, then updates (two updates per step with interleave).
RunResult train_cycle(const AppConfig& cfg, const CorpusManifest& manifest, CycleInputs models);

}  // namespace cyc
