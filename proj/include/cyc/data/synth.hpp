// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

// Toy "vocoder": every token is rendered as a fixed number of copies of its
// prototype frame plus Gaussian noise. A domain bundles the prototypes, the
// frames per token and the noise level.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cyc/models/types.hpp"
#include "cyc/rng.hpp"

namespace cyc {

struct DomainSpec {
  std::string name;
  std::vector<double> pattern_table;  // [vocab, dim], row-major
  int vocab = 0;
  std::size_t dim = 0;
  std::size_t frames_per_token = 1;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  std::span<const double> prototype(int token) const {
    return {pattern_table.data() + static_cast<std::size_t>(token) * dim, dim};
  }
  void validate() const;
};

// Prototype rows drawn i.i.d. N(0, 1) from `seed`.
DomainSpec make_domain(std::string name, int vocab, std::size_t dim, std::size_t frames_per_token,
                       double noise_sigma, std::uint64_t seed);

FeatureSeq synth_features(const TokenSeq& y, const DomainSpec& d, std::uint64_t utt_seed);

/// First-order Markov source over the content tokens (ids 2..K-1), with
/// sequence lengths uniform in [min_len, max_len]. Each row of the transition
/// table is a peaked random distribution, so the text has learnable structure.
class TokenSource {
 public:
  TokenSource(int vocab, std::size_t min_len, std::size_t max_len, std::uint64_t seed);

  TokenSeq draw(Rng& rng) const;
  // Row `prev` (SOS for the first token) of the transition table.
  std::span<const double> transition(int prev) const;

 private:
  int vocab_;
  std::size_t min_len_, max_len_;
  std::vector<double> table_;  // [vocab, vocab]
};

}  // namespace cyc
