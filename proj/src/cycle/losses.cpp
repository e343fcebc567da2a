// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/cycle/losses.hpp"

#include <cmath>
#include <string>

#include "cyc/errors.hpp"
#include "cyc/log.hpp"

namespace cyc {

using namespace ad;

void CycleConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("alpha must lie in [0, 1]");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ContractError("beta must be finite and >= 0");
  if (n_samples < 1) throw ContractError("n_samples must be at least 1");
  if (max_hyp_len < 1) throw ContractError("max_hyp_len must be at least 1");
  if (max_frames < 1) throw ContractError("max_frames must be at least 1");
}

namespace {

void require(const CycleModels& m, bool need_lm) {
  if (!m.asr || !m.tts || (need_lm && !m.lm)) throw ContractError("cycle step is missing a model");
}

double mean_of(const std::vector<double>& v, const std::vector<std::uint8_t>& used) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!used[i]) continue;
    sum += v[i];
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

// Score-function coefficient of each sample of one utterance. Deviations are
// taken from the first reward so that equal rewards give exact zeros.
void centred_rewards(std::span<const double> r, Baseline baseline, std::span<double> coef) {
  const std::size_t n = r.size();
  if (baseline == Baseline::kNone || n == 1) {
    std::copy(r.begin(), r.end(), coef.begin());
    return;
  }
  double mean_dev = 0.0;
  for (double v : r) mean_dev += v - r[0];
  mean_dev /= static_cast<double>(n);
  const double loo = static_cast<double>(n) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) coef[i] = loo * ((r[i] - r[0]) - mean_dev);
}

}  // namespace

SpeechOnlyTrace so_loss_trace(const CycleModels& m, std::span<const FeatureSeq* const> xs,
                              const CycleConfig& cfg, Rng& rng) {
  cfg.validate();
  require(m, true);
  SpeechOnlyTrace tr;
  if (xs.empty()) return tr;
  const std::size_t B = xs.size(), N = cfg.n_samples, R = B * N;

  Tape tape;
  Tape::Scope scope(tape);
  AsrModel::Encoded enc = m.asr->encode_batch(xs);
  std::vector<std::size_t> idx(R);
  for (std::size_t r = 0; r < R; ++r) idx[r] = r / N;
  AsrModel::Samples s = m.asr->sample_rows(enc.rows(idx), cfg.max_hyp_len, rng);
  tr.hyps = std::move(s.hyps);
  tr.utterance = idx;

  std::vector<const TokenSeq*> seqs(R);
  std::vector<const FeatureSeq*> feats(R);
  for (std::size_t r = 0; r < R; ++r) {
    seqs[r] = &tr.hyps[r].seq;
    feats[r] = xs[idx[r]];
  }

  tr.used.assign(R, 0);
  std::size_t used_utts = 0;
  for (std::size_t u = 0; u < B; ++u) {
    bool any = false;
    for (std::size_t i = 0; i < N; ++i) any = any || !tr.hyps[u * N + i].seq.empty();
    if (!any) {
      log_warn("speech-only: all " + std::to_string(N) + " hypotheses for utterance " +
               std::to_string(u) + " are empty; skipped");
      continue;
    }
    ++used_utts;
    for (std::size_t i = 0; i < N; ++i) tr.used[u * N + i] = 1;
  }

  Var tts_loss;
  if (cfg.train_tts) {
    tts_loss = m.tts->teacher_forced_batch(seqs, feats).total;
  } else {
    NoGradGuard ng;
    tts_loss = m.tts->teacher_forced_batch(seqs, feats).total;
  }
  {
    NoGradGuard ng;
    tr.lm_loss = m.lm->nll_batch(seqs).value().vec();
  }
  tr.tts_loss = tts_loss.value().vec();
  tr.reward.resize(R);
  for (std::size_t r = 0; r < R; ++r) tr.reward[r] = tr.tts_loss[r] + cfg.beta * tr.lm_loss[r];

  tr.tts_mean = mean_of(tr.tts_loss, tr.used);
  tr.lm_mean = mean_of(tr.lm_loss, tr.used);
  tr.report.n_used = used_utts * N;
  if (used_utts == 0) return tr;

  // The mean reward is assembled from the two term means so that the beta
  // term enters as exactly beta * mean(L_lm).
  tr.report.value = tr.tts_mean + cfg.beta * tr.lm_mean;
  tr.report.reward_mean = tr.report.value;
  double var = 0.0;
  for (std::size_t r = 0; r < R; ++r) {
    if (tr.used[r]) var += (tr.reward[r] - tr.report.reward_mean) * (tr.reward[r] - tr.report.reward_mean);
  }
  tr.report.reward_std = std::sqrt(var / static_cast<double>(tr.report.n_used));

  // Surrogate whose gradient is the estimator: mean over used utterances of
  //   (1/N) sum_i [coef_i * log p(Y_i|x) + L_tts(x|Y_i)]
  // with coef_i held constant.
  const double w = 1.0 / static_cast<double>(N * used_utts);
  Tensor score_w({R}), path_w({R});
  std::vector<double> coef(N);
  for (std::size_t u = 0; u < B; ++u) {
    if (!tr.used[u * N]) continue;
    centred_rewards(std::span<const double>(tr.reward).subspan(u * N, N), cfg.baseline, coef);
    for (std::size_t i = 0; i < N; ++i) {
      score_w[u * N + i] = coef[i] * w;
      path_w[u * N + i] = w;
    }
  }
  Var surrogate = sum(mul(s.log_probs, constant(std::move(score_w))));
  if (cfg.train_tts) surrogate = add(surrogate, sum(mul(tts_loss, constant(std::move(path_w)))));
  tape.backward(surrogate);
  return tr;
}

LossReport so_loss(const CycleModels& m, std::span<const FeatureSeq* const> xs,
                   const CycleConfig& cfg, Rng& rng) {
  return so_loss_trace(m, xs, cfg, rng).report;
}

LossReport so_loss(const CycleModels& m, const FeatureSeq& x, const CycleConfig& cfg, Rng& rng) {
  const FeatureSeq* xs[] = {&x};
  return so_loss(m, xs, cfg, rng);
}

std::vector<FeatureSeq> synthesize_for_asr(const TtsModel& tts,
                                           std::span<const TokenSeq* const> ys,
                                           std::size_t max_frames) {
  std::vector<FeatureSeq> out = tts.generate_batch(ys, max_frames);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].frames() > 0) continue;
    log_warn("text-only: TTS produced no frames for item " + std::to_string(i) +
             "; padded with one zero frame");
    out[i] = FeatureSeq(1, tts.config().feat_dim);
  }
  return out;
}

LossReport to_loss(const CycleModels& m, std::span<const TokenSeq* const> ys,
                   const CycleConfig& cfg) {
  cfg.validate();
  require(m, false);
  LossReport rep;
  if (ys.empty()) return rep;
  std::vector<FeatureSeq> synth = synthesize_for_asr(*m.tts, ys, cfg.max_frames);
  std::vector<const FeatureSeq*> xs;
  xs.reserve(synth.size());
  for (const auto& x : synth) xs.push_back(&x);

  Tape tape;
  Tape::Scope scope(tape);
  Var loss = mean(m.asr->nll_batch(xs, ys, cfg.alpha));
  tape.backward(loss);
  rep.value = loss.item();
  rep.n_used = ys.size();
  return rep;
}

LossReport to_loss(const CycleModels& m, const TokenSeq& y, const CycleConfig& cfg) {
  const TokenSeq* ys[] = {&y};
  return to_loss(m, ys, cfg);
}

LossReport st_loss(const CycleModels& m, std::span<const FeatureSeq* const> xs,
                   std::span<const TokenSeq* const> ys, const CycleConfig& cfg, Rng& rng) {
  const LossReport so = so_loss(m, xs, cfg, rng);
  const LossReport to = to_loss(m, ys, cfg);
  LossReport rep = so;
  rep.value = so.value + to.value;
  rep.n_used = so.n_used + to.n_used;
  return rep;
}

LossReport st_loss(const CycleModels& m, const FeatureSeq& x, const TokenSeq& y,
                   const CycleConfig& cfg, Rng& rng) {
  const FeatureSeq* xs[] = {&x};
  const TokenSeq* ys[] = {&y};
  return st_loss(m, xs, ys, cfg, rng);
}

double asr_supervised_loss(AsrModel& asr, std::span<const FeatureSeq* const> xs,
                           std::span<const TokenSeq* const> ys) {
  if (xs.empty()) return 0.0;
  Tape tape;
  Tape::Scope scope(tape);
  Var loss = mean(asr.nll_batch(xs, ys, std::nullopt));
  tape.backward(loss);
  return loss.item();
}

double tts_supervised_loss(TtsModel& tts, std::span<const TokenSeq* const> ys,
                           std::span<const FeatureSeq* const> xs) {
  if (ys.empty()) return 0.0;
  Tape tape;
  Tape::Scope scope(tape);
  Var loss = mean(tts.teacher_forced_batch(ys, xs).total);
  tape.backward(loss);
  return loss.item();
}

double lm_supervised_loss(LmModel& lm, std::span<const TokenSeq* const> ys) {
  if (ys.empty()) return 0.0;
  Tape tape;
  Tape::Scope scope(tape);
  Var loss = mean(lm.nll_batch(ys));
  tape.backward(loss);
  return loss.item();
}

double supervised_loss(AsrModel& asr, const FeatureSeq& x, const TokenSeq& y) {
  const FeatureSeq* xs[] = {&x};
  const TokenSeq* ys[] = {&y};
  return asr_supervised_loss(asr, xs, ys);
}

}  // namespace cyc
