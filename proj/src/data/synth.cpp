// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/data/synth.hpp"

#include <cmath>

#include "cyc/errors.hpp"

namespace cyc {

namespace {
constexpr int kFirstContent = 2;
constexpr double kTransitionPeak = 2.0;  // log-weight spread of a table row
}  // namespace

void DomainSpec::validate() const {
  if (vocab < 3) throw ContractError("domain '" + name + "': vocabulary too small");
  if (dim == 0) throw ContractError("domain '" + name + "': zero feature dimension");
  if (frames_per_token < 1) throw ContractError("domain '" + name + "': frames_per_token < 1");
  if (!(noise_sigma >= 0.0)) throw ContractError("domain '" + name + "': negative noise");
  if (pattern_table.size() != static_cast<std::size_t>(vocab) * dim) {
    throw ShapeError("domain '" + name + "': pattern table has " +
                     std::to_string(pattern_table.size()) + " values, expected " +
                     std::to_string(static_cast<std::size_t>(vocab) * dim));
  }
}

DomainSpec make_domain(std::string name, int vocab, std::size_t dim, std::size_t frames_per_token,
                       double noise_sigma, std::uint64_t seed) {
  DomainSpec d;
  d.name = std::move(name);
  d.vocab = vocab;
  d.dim = dim;
  d.frames_per_token = frames_per_token;
  d.noise_sigma = noise_sigma;
  d.seed = seed;
  Rng rng(derive_seed(seed, "patterns"));
  std::normal_distribution<double> n01(0.0, 1.0);
  d.pattern_table.resize(static_cast<std::size_t>(vocab) * dim);
  for (double& v : d.pattern_table) v = n01(rng);
  d.validate();
  return d;
}

FeatureSeq synth_features(const TokenSeq& y, const DomainSpec& d, std::uint64_t utt_seed) {
  d.validate();
  y.validate(d.vocab);
  if (y.empty()) throw ContractError("synth_features: empty token sequence");
  Rng rng(derive_seed(d.seed, utt_seed));
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t frames = y.size() * d.frames_per_token;
  std::vector<double> v;
  v.reserve(frames * d.dim);
  for (int tok : y.ids) {
    const auto proto = d.prototype(tok);
    for (std::size_t f = 0; f < d.frames_per_token; ++f) {
      for (double p : proto) v.push_back(p + d.noise_sigma * noise(rng));
    }
  }
  return FeatureSeq(frames, d.dim, std::move(v));
}

TokenSource::TokenSource(int vocab, std::size_t min_len, std::size_t max_len, std::uint64_t seed)
    : vocab_(vocab), min_len_(min_len), max_len_(max_len) {
  if (vocab < 3) throw ContractError("token source needs at least one content token");
  if (min_len > max_len) throw ContractError("token source: min_len > max_len");
  const auto K = static_cast<std::size_t>(vocab);
  table_.assign(K * K, 0.0);
  Rng rng(derive_seed(seed, "transitions"));
  std::normal_distribution<double> n01(0.0, 1.0);
  for (std::size_t prev = 0; prev < K; ++prev) {
    double total = 0.0;
    for (int k = kFirstContent; k < vocab; ++k) {
      const double w = std::exp(kTransitionPeak * n01(rng));
      table_[prev * K + static_cast<std::size_t>(k)] = w;
      total += w;
    }
    for (std::size_t k = 0; k < K; ++k) table_[prev * K + k] /= total;
  }
}

std::span<const double> TokenSource::transition(int prev) const {
  const auto K = static_cast<std::size_t>(vocab_);
  return {table_.data() + static_cast<std::size_t>(prev) * K, K};
}

TokenSeq TokenSource::draw(Rng& rng) const {
  std::uniform_int_distribution<std::size_t> len(min_len_, max_len_);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  TokenSeq y;
  const std::size_t n = len(rng);
  int prev = kSos;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = transition(prev);
    const double u = u01(rng);
    double acc = 0.0;
    int pick = vocab_ - 1;
    for (int k = kFirstContent; k < vocab_; ++k) {
      acc += row[static_cast<std::size_t>(k)];
      if (u < acc) {
        pick = k;
        break;
      }
    }
    y.ids.push_back(pick);
    prev = pick;
  }
  return y;
}

}  // namespace cyc
