// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

// Attention encoder-decoder recogniser.
//
//   encoder   bidirectional GRU over feature frames -> H [T, 2E]
//   attention additive: a_t = softmax_t(v . tanh(W h_t + U s + b))
//   context   c = alpha * sum_t a_t h_t     (alpha = 1 is the plain model)
//   decoder   s' = GRU([emb(y_prev), c], s); logits = W_o [s', c] + b_o
//
// The decoder state starts at zero and never sees the features except through
// c, so alpha = 0 turns the decoder into a pure token language model.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cyc/models/layers.hpp"

namespace cyc {

struct AsrConfig {
  int vocab = 12;
  std::size_t feat_dim = 8;
  std::size_t enc_hidden = 32;  // per direction
  std::size_t dec_hidden = 64;
  std::size_t embed = 16;
  std::size_t att_dim = 32;
  double init_scale = 0.08;
  std::uint64_t seed = 1;
};

// nullopt means "no scaling op at all"; used to check that alpha = 1 is exact.
using ContextScale = std::optional<double>;

class AsrModel {
 public:
  struct Encoded {
    ad::Var states;  // [B, T, 2E]
    ad::Var keys;    // [B, T, A]
    std::vector<std::uint8_t> pad;
    std::vector<std::size_t> lengths;
    std::size_t batch = 0;
    std::size_t steps = 0;

    // Selects (and may repeat) utterances, e.g. one row per hypothesis.
    Encoded rows(std::span<const std::size_t> idx) const;
  };

  struct Step {
    ad::Var logits;  // [B, K]
    ad::Var state;   // [B, dec_hidden]
  };

  struct Samples {
    std::vector<Hypothesis> hyps;
    ad::Var log_probs;  // [R], differentiable when recorded on a tape
  };

  explicit AsrModel(const AsrConfig& cfg);

  const AsrConfig& config() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  // Batched building blocks.
  Encoded encode_batch(std::span<const FeatureSeq* const> xs) const;
  ad::Var initial_state(std::size_t batch) const;
  ad::Var attention(const Encoded& enc, const ad::Var& state) const;  // [B, T]
  ad::Var context(const ad::Var& weights, const Encoded& enc, ContextScale alpha) const;
  Step decoder_step(const ad::Var& context, std::span<const int> y_prev, const ad::Var& state) const;

  // Teacher-forced NLL per utterance, terminal EOS included. [B]
  ad::Var nll_batch(std::span<const FeatureSeq* const> xs, std::span<const TokenSeq* const> ys,
                    ContextScale alpha) const;
  // Ancestral samples at temperature 1, one per row of `enc`.
  Samples sample_rows(const Encoded& enc, std::size_t max_len, Rng& rng) const;
  std::vector<Hypothesis> greedy_batch(std::span<const FeatureSeq* const> xs, double alpha,
                                       std::size_t max_len) const;

  // Single-utterance interface.
  EncoderStates encode(const FeatureSeq& x) const;
  AttentionWeights attend(const ad::Tensor& dec_state, const EncoderStates& h) const;
  // Vocabulary logits and the next decoder state.
  std::pair<std::vector<double>, ad::Tensor> decode_step(const ContextVector& c, int y_prev,
                                                         const ad::Tensor& state) const;
  ad::Var nll(const FeatureSeq& x, const TokenSeq& y, double alpha) const;
  std::vector<Hypothesis> sample(const FeatureSeq& x, std::size_t n, std::size_t max_len,
                                 std::uint64_t seed) const;
  Hypothesis greedy(const FeatureSeq& x, double alpha, std::size_t max_len) const;

 private:
  AsrConfig cfg_;
  ParamSet params_;
  GruCell enc_fwd_, enc_bwd_;
  ad::Var att_key_;    // [2E, A]
  Linear att_query_;   // dec_hidden -> A
  ad::Var att_score_;  // [A, 1]
  ad::Var embed_;      // [K, embed]
  GruCell dec_;
  Linear out_;         // dec_hidden + 2E -> K
};

/// c = alpha * sum_t a_t h_t
ContextVector context(const AttentionWeights& a, const EncoderStates& h, double alpha);

}  // namespace cyc
