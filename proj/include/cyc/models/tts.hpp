// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

// Autoregressive frame regressor.
//
// Tokens (plus a closing EOS slot) are embedded into a memory. Each output
// frame runs one GRU step and emits the frame mean and a stop logit from
// [state, context]. Attention over the memory is
// additive with a location term built from the cumulative attention, the
// previous attention and the previous attention shifted one slot right, which
// is what lets the regressor walk the token sequence monotonically.
//
// With `residual` (the default) the GRU is driven by the context alone and the
// mean is the previous frame plus a text-predicted increment, so every frame
// is anchored to the one before it. Without it the GRU input is
// [previous frame, context] and the mean is predicted directly.
//
// Likelihood: unit-variance Gaussian per frame plus a Bernoulli stop flag, so
//   L_TTS = 1/2 sum_t |x_t - mu_t|^2 + sum_t BCE(stop_t, [t == last])
// with the Gaussian normalising constant dropped.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cyc/models/layers.hpp"

namespace cyc {

struct TtsConfig {
  int vocab = 12;
  std::size_t feat_dim = 8;
  std::size_t embed = 16;
  std::size_t hidden = 64;
  std::size_t att_dim = 32;
  double init_scale = 0.08;
  std::uint64_t seed = 2;
  bool residual = true;
};

class TtsModel {
 public:
  struct Memory {
    ad::Var values;  // [B, J, embed]
    ad::Var keys;    // [B, J, A]
    ad::Tensor shift;  // [J, J], moves attention one slot right
    std::vector<std::uint8_t> pad;
    std::size_t batch = 0;
    std::size_t slots = 0;
  };

  struct State {
    ad::Var hidden;      // [B, H]
    ad::Var cumulative;  // [B, J]
    ad::Var previous;    // [B, J]
  };

  struct StepOut {
    ad::Var mean;        // [B, D]
    ad::Var stop_logit;  // [B, 1]
    State next;
  };

  // Per-utterance loss terms, each [B].
  struct Loss {
    ad::Var total;
    ad::Var squared;
    ad::Var stop;
  };

  explicit TtsModel(const TtsConfig& cfg);

  const TtsConfig& config() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  Memory encode_text(std::span<const TokenSeq* const> ys) const;
  State initial_state(const Memory& mem) const;
  StepOut step(const Memory& mem, const State& state, const ad::Var& prev_frame) const;

  // Teacher forcing: frame t is predicted from the true frames before it.
  Loss teacher_forced_batch(std::span<const TokenSeq* const> ys,
                            std::span<const FeatureSeq* const> xs) const;
  // Free running: each frame conditions on previously generated frames. Stops
  // after the frame whose stop probability exceeds 0.5, or at max_frames.
  // With ignore_stop the output always has exactly max_frames frames.
  std::vector<FeatureSeq> generate_batch(std::span<const TokenSeq* const> ys,
                                         std::size_t max_frames, bool ignore_stop = false) const;

  ad::Var teacher_forced_nll(const TokenSeq& y, const FeatureSeq& x) const;
  // The 1/2 squared-error part of teacher_forced_nll.
  double squared_error(const TokenSeq& y, const FeatureSeq& x) const;
  FeatureSeq generate(const TokenSeq& y, std::size_t max_frames) const;

 private:
  TtsConfig cfg_;
  ParamSet params_;
  ad::Var embed_;      // [K, embed]
  ad::Var att_key_;    // [embed, A]
  Linear att_query_;   // H -> A
  ad::Var att_loc_;    // [3, A]
  ad::Var att_score_;  // [A, 1]
  GruCell gru_;
  Linear mean_out_;    // H + embed -> D
  Linear stop_out_;    // H + embed -> 1
};

/// Per-frame squared error of teacher-forced and of free-running prediction
/// against `x`; the free-running trajectory is generated for exactly
/// x.frames() frames.
struct PredictionGap {
  double teacher_forced = 0.0;
  double free_running = 0.0;
};
PredictionGap prediction_gap(const TtsModel& tts, std::span<const TokenSeq* const> ys,
                             std::span<const FeatureSeq* const> xs);

}  // namespace cyc
