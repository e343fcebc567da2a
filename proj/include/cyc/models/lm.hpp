// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cyc/models/layers.hpp"

namespace cyc {

struct LmConfig {
  int vocab = 12;
  std::size_t embed = 16;
  std::size_t hidden = 64;
  double init_scale = 0.08;
  std::uint64_t seed = 3;
};

/// Token RNN language model: s_l = GRU(emb(y_{l-1}), s_{l-1}), starting from
/// SOS and a zero state; p(y_l | y_<l) = softmax(W s_l + b).
class LmModel {
 public:
  // Recurrent state after consuming some prefix; `last` is the token the next
  // step conditions on.
  struct Cursor {
    ad::Tensor hidden;  // [hidden]
    int last = kSos;
  };

  explicit LmModel(const LmConfig& cfg);

  const LmConfig& config() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  // Per-sequence NLL including the terminal EOS. [B]
  ad::Var nll_batch(std::span<const TokenSeq* const> ys) const;
  ad::Var nll(const TokenSeq& y) const;

  // Incremental scoring, no gradient: NLL of `tokens` continuing from `c`.
  Cursor start() const;
  double advance(Cursor& c, std::span<const int> tokens) const;
  // NLL of closing the sequence with EOS at `c`.
  double eos_nll(const Cursor& c) const;

 private:
  ad::Var step_logits(std::span<const int> prev, ad::Var& state) const;

  LmConfig cfg_;
  ParamSet params_;
  ad::Var embed_;
  GruCell gru_;
  Linear out_;
};

}  // namespace cyc
