// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cyc/autodiff/tensor.hpp"

namespace cyc {

// Reserved token ids. Every model uses the same conventions.
inline constexpr int kEos = 0;
inline constexpr int kSos = 1;

/// Discrete label sequence. Never stores the SOS marker or a trailing EOS.
struct TokenSeq {
  std::vector<int> ids;

  std::size_t size() const noexcept { return ids.size(); }
  bool empty() const noexcept { return ids.empty(); }

  // Throws ContractError unless every id is a content id in [2, vocab).
  void validate(int vocab) const;

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

struct Hypothesis {
  TokenSeq seq;
  double log_prob = 0.0;  // sum of per-step log-probabilities, EOS included if emitted
};

/// frames x dim real matrix standing in for a log-Mel filterbank sequence.
class FeatureSeq {
 public:
  FeatureSeq() = default;
  FeatureSeq(std::size_t frames, std::size_t dim);
  FeatureSeq(std::size_t frames, std::size_t dim, std::vector<double> values);

  std::size_t frames() const noexcept { return frames_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> row(std::size_t t) const { return {values_.data() + t * dim_, dim_}; }
  std::span<double> row(std::size_t t) { return {values_.data() + t * dim_, dim_}; }
  double at(std::size_t t, std::size_t d) const { return values_[t * dim_ + d]; }
  double& at(std::size_t t, std::size_t d) { return values_[t * dim_ + d]; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }

  friend bool operator==(const FeatureSeq&, const FeatureSeq&) = default;

 private:
  std::size_t frames_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

/// One encoder state row per input frame.
struct EncoderStates {
  ad::Tensor states;  // [frames, hidden]
  std::size_t frames() const { return states.dim(0); }
};

struct AttentionWeights {
  std::vector<double> weights;
};

struct ContextVector {
  std::vector<double> values;
};

}  // namespace cyc
