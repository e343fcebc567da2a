// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

// Unpaired training objectives.
//
// Speech only (ASR -> TTS). For speech x, hypotheses Y_i ~ p_asr(.|x) are
// scored with the reward
//     R_i = L_tts(x | Y_i) + beta * L_lm(Y_i)
// which is a loss: smaller is better. The objective is E_Y[R(Y)]. Its ASR
// gradient is estimated by the score function
//     (1/N) sum_i (R_i - b_i) grad log p_asr(Y_i | x)
// and its TTS gradient pathwise by (1/N) sum_i grad L_tts(x | Y_i). The
// language model only scores; it never receives a gradient.
//
// With Baseline::kMean, b_i is the mean reward of the *other* samples drawn
// for the same utterance (zero when N = 1). Being independent of Y_i it leaves
// the expected gradient unchanged; it equals N/(N-1) times the deviation from
// the plain sample mean.
//
// Text only (TTS -> ASR). For text y*, features are generated by the TTS with
// no gradient, then the ASR is trained on them with its attention context
// scaled by alpha.
//
// Every function here runs its own tape and *accumulates* into parameter
// gradients, so several losses can be summed into one optimizer step.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cyc/models/asr.hpp"
#include "cyc/models/lm.hpp"
#include "cyc/models/tts.hpp"

namespace cyc {

enum class Baseline { kMean, kNone };

struct CycleConfig {
  double alpha = 1.0;
  double beta = 0.1;
  std::size_t n_samples = 4;
  std::size_t max_hyp_len = 12;
  std::size_t max_frames = 60;
  Baseline baseline = Baseline::kMean;
  // Pathwise TTS update from the speech-only objective.
  bool train_tts = true;

  void validate() const;  // ContractError on out-of-range fields
};

struct LossReport {
  double value = 0.0;
  double reward_mean = 0.0;
  double reward_std = 0.0;
  std::size_t n_used = 0;
};

// The models a cycle step touches. The language model is read only.
struct CycleModels {
  AsrModel* asr = nullptr;
  TtsModel* tts = nullptr;
  const LmModel* lm = nullptr;
};

// Speech-only step with the per-hypothesis breakdown, for diagnostics and
// tests. Vectors are indexed by hypothesis, utterance-major.
struct SpeechOnlyTrace {
  LossReport report;
  std::vector<Hypothesis> hyps;
  std::vector<std::size_t> utterance;  // source utterance of each hypothesis
  std::vector<double> tts_loss;
  std::vector<double> lm_loss;
  std::vector<double> reward;
  std::vector<std::uint8_t> used;
  double tts_mean = 0.0;  // over used hypotheses
  double lm_mean = 0.0;
};

SpeechOnlyTrace so_loss_trace(const CycleModels& m, std::span<const FeatureSeq* const> xs,
                              const CycleConfig& cfg, Rng& rng);
LossReport so_loss(const CycleModels& m, std::span<const FeatureSeq* const> xs,
                   const CycleConfig& cfg, Rng& rng);
LossReport so_loss(const CycleModels& m, const FeatureSeq& x, const CycleConfig& cfg, Rng& rng);

// Features the text-only path trains on: free-running TTS output, padded to
// one zero frame when the TTS stops immediately.
std::vector<FeatureSeq> synthesize_for_asr(const TtsModel& tts,
                                           std::span<const TokenSeq* const> ys,
                                           std::size_t max_frames);

LossReport to_loss(const CycleModels& m, std::span<const TokenSeq* const> ys,
                   const CycleConfig& cfg);
LossReport to_loss(const CycleModels& m, const TokenSeq& y, const CycleConfig& cfg);

// Speech-only on xs then text-only on ys; values add.
LossReport st_loss(const CycleModels& m, std::span<const FeatureSeq* const> xs,
                   std::span<const TokenSeq* const> ys, const CycleConfig& cfg, Rng& rng);
LossReport st_loss(const CycleModels& m, const FeatureSeq& x, const TokenSeq& y,
                   const CycleConfig& cfg, Rng& rng);

// Paired losses: batch mean of the per-utterance teacher-forced NLL. Each runs
// backward; the returned value is that mean. An empty batch returns 0 and
// touches nothing.
double asr_supervised_loss(AsrModel& asr, std::span<const FeatureSeq* const> xs,
                           std::span<const TokenSeq* const> ys);
double tts_supervised_loss(TtsModel& tts, std::span<const TokenSeq* const> ys,
                           std::span<const FeatureSeq* const> xs);
double lm_supervised_loss(LmModel& lm, std::span<const TokenSeq* const> ys);

double supervised_loss(AsrModel& asr, const FeatureSeq& x, const TokenSeq& y);

}  // namespace cyc
