// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/models/asr.hpp"

#include <algorithm>
#include <cmath>

#include "cyc/errors.hpp"

namespace cyc {

using namespace ad;

namespace {
constexpr double kMaskedScore = -1e9;

int sample_index(std::span<const double> log_probs, Rng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double u = u01(rng);
  double acc = 0.0;
  for (std::size_t k = 0; k < log_probs.size(); ++k) {
    acc += std::exp(log_probs[k]);
    if (u < acc) return static_cast<int>(k);
  }
  // Rounding left u above the total mass; take the last class with mass.
  for (std::size_t k = log_probs.size(); k-- > 0;) {
    if (std::exp(log_probs[k]) > 0.0) return static_cast<int>(k);
  }
  return 0;
}

// Decoding never emits SOS: its logit is pushed out of the softmax, so
// samples, greedy paths and their log-probabilities all live on the
// distribution renormalised over EOS and the content tokens.
Var hypothesis_log_probs(const Var& logits) {
  Tensor mask({logits.shape()[1]});
  mask[kSos] = kMaskedScore;
  return log_softmax(add(logits, constant(std::move(mask))));
}

int argmax(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}
}  // namespace

AsrModel::AsrModel(const AsrConfig& cfg) : cfg_(cfg) {
  if (cfg.vocab < 3) throw ContractError("ASR vocabulary needs at least EOS, SOS and one token");
  Rng rng(cfg.seed);
  const double s = cfg.init_scale;
  const std::size_t E = cfg.enc_hidden, H2 = 2 * cfg.enc_hidden;
  enc_fwd_ = GruCell(params_, "enc.fwd", cfg.feat_dim, E, rng, s);
  enc_bwd_ = GruCell(params_, "enc.bwd", cfg.feat_dim, E, rng, s);
  att_key_ = params_.add("att.key", {H2, cfg.att_dim}, rng, s);
  att_query_ = Linear(params_, "att.query", cfg.dec_hidden, cfg.att_dim, rng, s);
  att_score_ = params_.add("att.score", {cfg.att_dim, 1}, rng, s);
  embed_ = params_.add("dec.embed", {static_cast<std::size_t>(cfg.vocab), cfg.embed}, rng, s);
  dec_ = GruCell(params_, "dec.gru", cfg.embed + H2, cfg.dec_hidden, rng, s);
  out_ = Linear(params_, "dec.out", cfg.dec_hidden + H2, static_cast<std::size_t>(cfg.vocab), rng, s);
}

AsrModel::Encoded AsrModel::Encoded::rows(std::span<const std::size_t> idx) const {
  Encoded e;
  e.batch = idx.size();
  e.steps = steps;
  const std::size_t sw = states.shape()[2], kw = keys.shape()[2];
  e.states = reshape(gather_rows(reshape(states, {batch, steps * sw}), idx), {e.batch, steps, sw});
  e.keys = reshape(gather_rows(reshape(keys, {batch, steps * kw}), idx), {e.batch, steps, kw});
  for (std::size_t i : idx) {
    e.lengths.push_back(lengths[i]);
    e.pad.insert(e.pad.end(), pad.begin() + i * steps, pad.begin() + (i + 1) * steps);
  }
  return e;
}

AsrModel::Encoded AsrModel::encode_batch(std::span<const FeatureSeq* const> xs) const {
  PackedFrames p = pack_frames(xs, cfg_.feat_dim);
  const std::size_t B = p.batch, T = p.steps, D = cfg_.feat_dim, E = cfg_.enc_hidden;
  Var x = constant(p.frames.reshaped({B * T, D}));
  Var gf = reshape(enc_fwd_.project_input(x), {B, T, 3 * E});
  Var gb = reshape(enc_bwd_.project_input(x), {B, T, 3 * E});

  std::vector<Var> fwd(T), bwd(T);
  Var h = constant(Tensor({B, E}));
  for (std::size_t t = 0; t < T; ++t) {
    h = enc_fwd_.step(select_step(gf, t), h);
    fwd[t] = h;
  }
  // The backward direction must start at each utterance's own last frame:
  // padded steps leave the state untouched.
  h = constant(Tensor({B, E}));
  for (std::size_t t = T; t-- > 0;) {
    Var cand = enc_bwd_.step(select_step(gb, t), h);
    bool all_valid = true;
    Tensor m({B, E});
    for (std::size_t b = 0; b < B; ++b) {
      const double on = t < p.lengths[b] ? 1.0 : 0.0;
      all_valid = all_valid && on == 1.0;
      for (std::size_t j = 0; j < E; ++j) m[b * E + j] = on;
    }
    h = all_valid ? cand : add(h, mul(sub(cand, h), constant(std::move(m))));
    bwd[t] = h;
  }

  Encoded enc;
  enc.batch = B;
  enc.steps = T;
  enc.lengths = p.lengths;
  enc.pad = p.pad_mask();
  enc.states = concat({stack_steps(fwd), stack_steps(bwd)});
  enc.keys = reshape(matmul(reshape(enc.states, {B * T, 2 * E}), att_key_), {B, T, cfg_.att_dim});
  return enc;
}

Var AsrModel::initial_state(std::size_t batch) const {
  return constant(Tensor({batch, cfg_.dec_hidden}));
}

Var AsrModel::attention(const Encoded& enc, const Var& state) const {
  const std::size_t B = enc.batch, T = enc.steps, A = cfg_.att_dim;
  Var e = ad::tanh(add_steps(enc.keys, att_query_(state)));
  Var scores = reshape(matmul(reshape(e, {B * T, A}), att_score_), {B, T});
  return softmax(masked_fill(scores, enc.pad, kMaskedScore));
}

Var AsrModel::context(const Var& weights, const Encoded& enc, ContextScale alpha) const {
  Var c = weighted_steps(weights, enc.states);
  return alpha ? scale(c, *alpha) : c;
}

AsrModel::Step AsrModel::decoder_step(const Var& ctx, std::span<const int> y_prev,
                                      const Var& state) const {
  Var e = embedding(embed_, y_prev);
  Var h = dec_.step(dec_.project_input(concat({e, ctx})), state);
  return {out_(concat({h, ctx})), h};
}

Var AsrModel::nll_batch(std::span<const FeatureSeq* const> xs, std::span<const TokenSeq* const> ys,
                        ContextScale alpha) const {
  if (xs.size() != ys.size()) throw ContractError("nll_batch: features and labels differ in count");
  Encoded enc = encode_batch(xs);
  const std::size_t B = enc.batch;
  std::size_t steps = 0;
  for (const auto* y : ys) steps = std::max(steps, y->size() + 1);

  Var state = initial_state(B);
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
    Var a = attention(enc, state);
    Step st = decoder_step(context(a, enc, alpha), prev, state);
    state = st.state;
    Var picked = pick(log_softmax(st.logits), target);
    if (!all_on) picked = mul(picked, indicator(on));
    total = total.valid() ? add(total, picked) : picked;
    prev = target;
  }
  return scale(total, -1.0);
}

AsrModel::Samples AsrModel::sample_rows(const Encoded& enc, std::size_t max_len, Rng& rng) const {
  const std::size_t R = enc.batch;
  Samples out;
  out.hyps.resize(R);
  std::vector<std::uint8_t> active(R, 1);
  std::vector<int> prev(R, kSos), chosen(R, kEos);
  Var state = initial_state(R);
  Var total;
  for (std::size_t l = 0; l < max_len; ++l) {
    if (std::none_of(active.begin(), active.end(), [](auto a) { return a != 0; })) break;
    Var a = attention(enc, state);
    Step st = decoder_step(context(a, enc, 1.0), prev, state);
    state = st.state;
    Var logp = hypothesis_log_probs(st.logits);
    const std::size_t K = logp.shape()[1];
    std::vector<std::uint8_t> on = active;
    for (std::size_t r = 0; r < R; ++r) {
      if (!active[r]) {
        chosen[r] = kEos;
        continue;
      }
      std::span<const double> row(logp.value().data().data() + r * K, K);
      const int tok = sample_index(row, rng);
      chosen[r] = tok;
      if (tok == kEos) {
        active[r] = 0;
      } else {
        out.hyps[r].seq.ids.push_back(tok);
        if (out.hyps[r].seq.size() == max_len) active[r] = 0;
      }
    }
    Var picked = mul(pick(logp, chosen), indicator(on));
    total = total.valid() ? add(total, picked) : picked;
    prev = chosen;
  }
  if (!total.valid()) total = constant(Tensor({R}));
  for (std::size_t r = 0; r < R; ++r) out.hyps[r].log_prob = total.value()[r];
  out.log_probs = total;
  return out;
}

std::vector<Hypothesis> AsrModel::greedy_batch(std::span<const FeatureSeq* const> xs, double alpha,
                                               std::size_t max_len) const {
  NoGradGuard ng;
  Encoded enc = encode_batch(xs);
  const std::size_t R = enc.batch;
  std::vector<Hypothesis> hyps(R);
  std::vector<std::uint8_t> active(R, 1);
  std::vector<int> prev(R, kSos);
  Var state = initial_state(R);
  for (std::size_t l = 0; l < max_len; ++l) {
    if (std::none_of(active.begin(), active.end(), [](auto a) { return a != 0; })) break;
    Step st = decoder_step(context(attention(enc, state), enc, alpha), prev, state);
    state = st.state;
    Var logp = hypothesis_log_probs(st.logits);
    const std::size_t K = logp.shape()[1];
    for (std::size_t r = 0; r < R; ++r) {
      if (!active[r]) continue;
      std::span<const double> row(logp.value().data().data() + r * K, K);
      const int tok = argmax(row);
      hyps[r].log_prob += row[static_cast<std::size_t>(tok)];
      prev[r] = tok;
      if (tok == kEos) {
        active[r] = 0;
      } else {
        hyps[r].seq.ids.push_back(tok);
        if (hyps[r].seq.size() == max_len) active[r] = 0;
      }
    }
  }
  return hyps;
}

EncoderStates AsrModel::encode(const FeatureSeq& x) const {
  NoGradGuard ng;
  const FeatureSeq* xs[] = {&x};
  Encoded enc = encode_batch(xs);
  return {enc.states.value().reshaped({enc.steps, 2 * cfg_.enc_hidden})};
}

AttentionWeights AsrModel::attend(const Tensor& dec_state, const EncoderStates& h) const {
  NoGradGuard ng;
  if (h.states.rank() != 2 || h.states.dim(1) != 2 * cfg_.enc_hidden) {
    throw ShapeError("attend: encoder states of shape " + to_string(h.states.shape()));
  }
  const std::size_t T = h.frames();
  Var keys = matmul(constant(h.states), att_key_);
  Var q = reshape(att_query_(constant(dec_state.reshaped({1, cfg_.dec_hidden}))), {cfg_.att_dim});
  Var scores = reshape(matmul(ad::tanh(add(keys, q)), att_score_), {T});
  Var a = softmax(scores);
  return {a.value().vec()};
}

std::pair<std::vector<double>, Tensor> AsrModel::decode_step(const ContextVector& c, int y_prev,
                                                             const Tensor& state) const {
  NoGradGuard ng;
  const int prev[] = {y_prev};
  Var ctx = constant(Tensor({1, c.values.size()}, c.values));
  Step st = decoder_step(ctx, prev, constant(state.reshaped({1, cfg_.dec_hidden})));
  return {st.logits.value().vec(), st.state.value().reshaped({cfg_.dec_hidden})};
}

Var AsrModel::nll(const FeatureSeq& x, const TokenSeq& y, double alpha) const {
  const FeatureSeq* xs[] = {&x};
  const TokenSeq* ys[] = {&y};
  return reshape(nll_batch(xs, ys, alpha), {});
}

std::vector<Hypothesis> AsrModel::sample(const FeatureSeq& x, std::size_t n, std::size_t max_len,
                                         std::uint64_t seed) const {
  if (n == 0) throw ContractError("sample: n must be at least 1");
  NoGradGuard ng;
  const FeatureSeq* xs[] = {&x};
  Encoded enc = encode_batch(xs);
  std::vector<std::size_t> idx(n, 0);
  Rng rng(seed);
  return sample_rows(enc.rows(idx), max_len, rng).hyps;
}

Hypothesis AsrModel::greedy(const FeatureSeq& x, double alpha, std::size_t max_len) const {
  const FeatureSeq* xs[] = {&x};
  return greedy_batch(xs, alpha, max_len).front();
}

ContextVector context(const AttentionWeights& a, const EncoderStates& h, double alpha) {
  if (a.weights.size() != h.frames()) {
    throw ShapeError("context: " + std::to_string(a.weights.size()) + " weights for " +
                     std::to_string(h.frames()) + " encoder states");
  }
  const std::size_t D = h.states.dim(1);
  ContextVector c{std::vector<double>(D, 0.0)};
  for (std::size_t t = 0; t < a.weights.size(); ++t) {
    for (std::size_t d = 0; d < D; ++d) c.values[d] += a.weights[t] * h.states.at(t, d);
  }
  for (double& v : c.values) v *= alpha;
  return c;
}

}  // namespace cyc
