// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/models/tts.hpp"

#include <algorithm>

#include "cyc/errors.hpp"

namespace cyc {

using namespace ad;

namespace {
constexpr double kMaskedScore = -1e9;
}

TtsModel::TtsModel(const TtsConfig& cfg) : cfg_(cfg) {
  Rng rng(cfg.seed);
  const double s = cfg.init_scale;
  const auto K = static_cast<std::size_t>(cfg.vocab);
  embed_ = params_.add("embed", {K, cfg.embed}, rng, s);
  att_key_ = params_.add("att.key", {cfg.embed, cfg.att_dim}, rng, s);
  att_query_ = Linear(params_, "att.query", cfg.hidden, cfg.att_dim, rng, s);
  att_loc_ = params_.add("att.loc", {3, cfg.att_dim}, rng, s);
  att_score_ = params_.add("att.score", {cfg.att_dim, 1}, rng, s);
  const std::size_t gru_in = cfg.residual ? cfg.embed : cfg.feat_dim + cfg.embed;
  gru_ = GruCell(params_, "gru", gru_in, cfg.hidden, rng, s);
  mean_out_ = Linear(params_, "out.mean", cfg.hidden + cfg.embed, cfg.feat_dim, rng, s);
  stop_out_ = Linear(params_, "out.stop", cfg.hidden + cfg.embed, 1, rng, s);
}

TtsModel::Memory TtsModel::encode_text(std::span<const TokenSeq* const> ys) const {
  if (ys.empty()) throw ContractError("empty batch");
  Memory m;
  m.batch = ys.size();
  for (const auto* y : ys) m.slots = std::max(m.slots, y->size() + 1);
  const std::size_t B = m.batch, J = m.slots;
  std::vector<int> ids(B * J, kEos);
  m.pad.assign(B * J, 0);
  for (std::size_t b = 0; b < B; ++b) {
    const auto& y = ys[b]->ids;
    std::copy(y.begin(), y.end(), ids.begin() + b * J);
    for (std::size_t j = y.size() + 1; j < J; ++j) m.pad[b * J + j] = 1;
  }
  Var e = embedding(embed_, ids);
  m.values = reshape(e, {B, J, cfg_.embed});
  m.keys = reshape(matmul(e, att_key_), {B, J, cfg_.att_dim});
  m.shift = Tensor({J, J});
  for (std::size_t j = 0; j + 1 < J; ++j) m.shift.at(j, j + 1) = 1.0;
  return m;
}

TtsModel::State TtsModel::initial_state(const Memory& mem) const {
  Tensor first({mem.batch, mem.slots});
  for (std::size_t b = 0; b < mem.batch; ++b) first.at(b, 0) = 1.0;
  return {constant(Tensor({mem.batch, cfg_.hidden})), constant(Tensor({mem.batch, mem.slots})),
          constant(std::move(first))};
}

TtsModel::StepOut TtsModel::step(const Memory& mem, const State& st, const Var& prev_frame) const {
  const std::size_t B = mem.batch, J = mem.slots, A = cfg_.att_dim;
  Var shifted = matmul(st.previous, constant(mem.shift));
  Var loc = concat({reshape(st.cumulative, {B, J, 1}), reshape(st.previous, {B, J, 1}),
                    reshape(shifted, {B, J, 1})});
  Var loc_proj = reshape(matmul(reshape(loc, {B * J, 3}), att_loc_), {B, J, A});
  Var e = ad::tanh(add_steps(add(mem.keys, loc_proj), att_query_(st.hidden)));
  Var scores = reshape(matmul(reshape(e, {B * J, A}), att_score_), {B, J});
  Var a = softmax(masked_fill(scores, mem.pad, kMaskedScore));
  Var ctx = weighted_steps(a, mem.values);
  Var gru_in = cfg_.residual ? ctx : concat({prev_frame, ctx});
  Var h = gru_.step(gru_.project_input(gru_in), st.hidden);
  Var hc = concat({h, ctx});
  Var mean = mean_out_(hc);
  if (cfg_.residual) mean = add(prev_frame, mean);
  return {mean, stop_out_(hc), State{h, add(st.cumulative, a), a}};
}

TtsModel::Loss TtsModel::teacher_forced_batch(std::span<const TokenSeq* const> ys,
                                              std::span<const FeatureSeq* const> xs) const {
  if (ys.size() != xs.size()) throw ContractError("teacher_forced_batch: batch sizes differ");
  PackedFrames p = pack_frames(xs, cfg_.feat_dim);
  Memory mem = encode_text(ys);
  const std::size_t B = p.batch, T = p.steps, D = cfg_.feat_dim;
  State st = initial_state(mem);
  Var sq, stop;
  const Var zeros_col = constant(Tensor({B, 1}));
  std::vector<int> stop_target(B);
  std::vector<std::uint8_t> on(B);
  for (std::size_t t = 0; t < T; ++t) {
    Tensor prev({B, D}), cur({B, D});
    bool all_on = true;
    for (std::size_t b = 0; b < B; ++b) {
      on[b] = t < p.lengths[b];
      all_on = all_on && on[b];
      stop_target[b] = t + 1 == p.lengths[b] ? 1 : 0;
      if (!on[b]) continue;
      for (std::size_t d = 0; d < D; ++d) {
        cur.at(b, d) = p.frames[(b * T + t) * D + d];
        if (t > 0) prev.at(b, d) = p.frames[(b * T + t - 1) * D + d];
      }
    }
    StepOut out = step(mem, st, constant(std::move(prev)));
    st = out.next;
    Var diff = sub(out.mean, constant(std::move(cur)));
    Var frame_sq = sum_last(mul(diff, diff));
    // BCE with logits as a two-class log-softmax over [0, logit].
    Var frame_stop = scale(pick(log_softmax(concat({zeros_col, out.stop_logit})), stop_target), -1.0);
    if (!all_on) {
      Var m = indicator(on);
      frame_sq = mul(frame_sq, m);
      frame_stop = mul(frame_stop, m);
    }
    sq = sq.valid() ? add(sq, frame_sq) : frame_sq;
    stop = stop.valid() ? add(stop, frame_stop) : frame_stop;
  }
  Var half_sq = scale(sq, 0.5);
  return {add(half_sq, stop), half_sq, stop};
}

std::vector<FeatureSeq> TtsModel::generate_batch(std::span<const TokenSeq* const> ys,
                                                 std::size_t max_frames, bool ignore_stop) const {
  NoGradGuard ng;
  const std::size_t B = ys.size(), D = cfg_.feat_dim;
  std::vector<std::vector<double>> frames(B);
  if (max_frames == 0) {
    std::vector<FeatureSeq> empty(B);
    for (auto& f : empty) f = FeatureSeq(0, D);
    return empty;
  }
  Memory mem = encode_text(ys);
  State st = initial_state(mem);
  std::vector<std::uint8_t> active(B, 1);
  Var prev = constant(Tensor({B, D}));
  for (std::size_t t = 0; t < max_frames; ++t) {
    if (std::none_of(active.begin(), active.end(), [](auto a) { return a != 0; })) break;
    StepOut out = step(mem, st, prev);
    st = out.next;
    prev = out.mean;
    const auto mu = out.mean.value().data();
    for (std::size_t b = 0; b < B; ++b) {
      if (!active[b]) continue;
      frames[b].insert(frames[b].end(), mu.begin() + b * D, mu.begin() + (b + 1) * D);
      // sigmoid(l) > 0.5  <=>  l > 0
      if (!ignore_stop && out.stop_logit.value()[b] > 0.0) active[b] = 0;
    }
  }
  std::vector<FeatureSeq> result;
  result.reserve(B);
  for (auto& f : frames) {
    const std::size_t n = f.size() / D;
    result.emplace_back(n, D, std::move(f));
  }
  return result;
}

Var TtsModel::teacher_forced_nll(const TokenSeq& y, const FeatureSeq& x) const {
  const TokenSeq* ys[] = {&y};
  const FeatureSeq* xs[] = {&x};
  return reshape(teacher_forced_batch(ys, xs).total, {});
}

double TtsModel::squared_error(const TokenSeq& y, const FeatureSeq& x) const {
  NoGradGuard ng;
  const TokenSeq* ys[] = {&y};
  const FeatureSeq* xs[] = {&x};
  return teacher_forced_batch(ys, xs).squared.value()[0];
}

FeatureSeq TtsModel::generate(const TokenSeq& y, std::size_t max_frames) const {
  const TokenSeq* ys[] = {&y};
  return std::move(generate_batch(ys, max_frames).front());
}

PredictionGap prediction_gap(const TtsModel& tts, std::span<const TokenSeq* const> ys,
                             std::span<const FeatureSeq* const> xs) {
  NoGradGuard ng;
  PredictionGap gap;
  std::size_t frames = 0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const TokenSeq* y[] = {ys[i]};
    const FeatureSeq* x[] = {xs[i]};
    // squared is 1/2 sum |x - mu|^2
    gap.teacher_forced += 2.0 * tts.teacher_forced_batch(y, x).squared.value()[0];
    FeatureSeq free = tts.generate_batch(y, xs[i]->frames(), true).front();
    for (std::size_t t = 0; t < free.frames(); ++t) {
      for (std::size_t d = 0; d < free.dim(); ++d) {
        const double diff = free.at(t, d) - xs[i]->at(t, d);
        gap.free_running += diff * diff;
      }
    }
    frames += xs[i]->frames();
  }
  gap.teacher_forced /= static_cast<double>(frames);
  gap.free_running /= static_cast<double>(frames);
  return gap;
}

}  // namespace cyc
