// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/models/lm.hpp"

#include <algorithm>

#include "cyc/errors.hpp"

namespace cyc {

using namespace ad;

LmModel::LmModel(const LmConfig& cfg) : cfg_(cfg) {
  if (cfg.vocab < 3) throw ContractError("LM vocabulary needs at least EOS, SOS and one token");
  Rng rng(cfg.seed);
  const auto K = static_cast<std::size_t>(cfg.vocab);
  embed_ = params_.add("embed", {K, cfg.embed}, rng, cfg.init_scale);
  gru_ = GruCell(params_, "gru", cfg.embed, cfg.hidden, rng, cfg.init_scale);
  out_ = Linear(params_, "out", cfg.hidden, K, rng, cfg.init_scale);
}

Var LmModel::step_logits(std::span<const int> prev, Var& state) const {
  state = gru_.step(gru_.project_input(embedding(embed_, prev)), state);
  return out_(state);
}

Var LmModel::nll_batch(std::span<const TokenSeq* const> ys) const {
  if (ys.empty()) throw ContractError("lm nll_batch: empty batch");
  const std::size_t B = ys.size();
  std::size_t steps = 0;
  for (const auto* y : ys) steps = std::max(steps, y->size() + 1);
  Var state = constant(Tensor({B, cfg_.hidden}));
  Var total;
  std::vector<int> prev(B, kSos), target(B);
  std::vector<std::uint8_t> on(B);
  for (std::size_t l = 0; l < steps; ++l) {
    bool all_on = true;
    for (std::size_t b = 0; b < B; ++b) {
      const auto& y = ys[b]->ids;
      target[b] = l < y.size() ? y[l] : kEos;
      on[b] = l <= y.size();
      all_on = all_on && on[b];
    }
    Var picked = pick(log_softmax(step_logits(prev, state)), target);
    if (!all_on) picked = mul(picked, indicator(on));
    total = total.valid() ? add(total, picked) : picked;
    prev = target;
  }
  return scale(total, -1.0);
}

Var LmModel::nll(const TokenSeq& y) const {
  const TokenSeq* ys[] = {&y};
  return reshape(nll_batch(ys), {});
}

LmModel::Cursor LmModel::start() const { return {Tensor({cfg_.hidden}), kSos}; }

double LmModel::advance(Cursor& c, std::span<const int> tokens) const {
  NoGradGuard ng;
  double total = 0.0;
  Var state = constant(c.hidden.reshaped({1, cfg_.hidden}));
  for (int tok : tokens) {
    const int prev[] = {c.last};
    const int target[] = {tok};
    total -= pick(log_softmax(step_logits(prev, state)), target).value()[0];
    c.last = tok;
  }
  c.hidden = state.value().reshaped({cfg_.hidden});
  return total;
}

double LmModel::eos_nll(const Cursor& c) const {
  Cursor copy = c;
  const int eos[] = {kEos};
  return advance(copy, eos);
}

}  // namespace cyc
