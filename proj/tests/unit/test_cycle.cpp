// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <gtest/gtest.h>

#include "cyc/autodiff/ops.hpp"
#include "cyc/cycle/losses.hpp"
#include "cyc/data/synth.hpp"
#include "cyc/errors.hpp"
#include "cyc/log.hpp"

namespace cyc {
namespace {

struct Models {
  AsrModel asr;
  TtsModel tts;
  LmModel lm;

  Models() : asr(asr_cfg()), tts(tts_cfg()), lm(lm_cfg()) {}

  static AsrConfig asr_cfg() {
    AsrConfig c;
    c.vocab = 6;
    c.feat_dim = 3;
    c.enc_hidden = 4;
    c.dec_hidden = 5;
    c.embed = 3;
    c.att_dim = 4;
    c.init_scale = 0.4;
    c.seed = 31;
    return c;
  }
  static TtsConfig tts_cfg() {
    TtsConfig c;
    c.vocab = 6;
    c.feat_dim = 3;
    c.embed = 4;
    c.hidden = 5;
    c.att_dim = 4;
    c.init_scale = 0.4;
    c.seed = 32;
    return c;
  }
  static LmConfig lm_cfg() {
    LmConfig c;
    c.vocab = 6;
    c.embed = 3;
    c.hidden = 5;
    c.init_scale = 0.4;
    c.seed = 33;
    return c;
  }

  CycleModels view() { return {&asr, &tts, &lm}; }

  void zero_grad() {
    asr.params().zero_grad();
    tts.params().zero_grad();
    lm.params().zero_grad();
  }
};

std::vector<ad::Tensor> grads(const ParamSet& ps) {
  std::vector<ad::Tensor> out;
  for (const auto& [name, v] : ps.named()) {
    out.push_back(v.has_grad() ? v.grad() : ad::Tensor(v.shape()));
  }
  return out;
}

std::vector<ad::Tensor> values(const ParamSet& ps) {
  std::vector<ad::Tensor> out;
  for (const auto& [name, v] : ps.named()) out.push_back(v.value());
  return out;
}

struct Data {
  DomainSpec domain = make_domain("in", 6, 3, 2, 0.1, 9);
  std::vector<TokenSeq> ys{{{2, 3}}, {{4, 5, 2}}};
  std::vector<FeatureSeq> xs;
  std::vector<const FeatureSeq*> xp;
  std::vector<const TokenSeq*> yp;
  Data() {
    for (std::size_t i = 0; i < ys.size(); ++i) xs.push_back(synth_features(ys[i], domain, 7 + i));
    for (const auto& x : xs) xp.push_back(&x);
    for (const auto& y : ys) yp.push_back(&y);
  }
};

CycleConfig small_cycle() {
  CycleConfig c;
  c.n_samples = 4;
  c.max_hyp_len = 30;
  c.max_frames = 20;
  c.beta = 0.3;
  return c;
}

TEST(CycleConfig, Validate) {
  CycleConfig c;
  EXPECT_NO_THROW(c.validate());
  c.n_samples = 0;
  EXPECT_THROW(c.validate(), ContractError);
  c = CycleConfig{};
  c.alpha = -0.1;
  EXPECT_THROW(c.validate(), ContractError);
}

TEST(SpeechOnly, LmTermEntersLinearly) {
  Models m;
  Data d;
  CycleConfig cfg = small_cycle();
  for (double beta : {0.0, 0.3, 2.0}) {
    cfg.beta = 0.0;
    Rng r0(5);
    const SpeechOnlyTrace base = so_loss_trace(m.view(), d.xp, cfg, r0);
    cfg.beta = beta;
    Rng r1(5);
    const SpeechOnlyTrace with = so_loss_trace(m.view(), d.xp, cfg, r1);
    EXPECT_EQ(with.report.value, base.report.value + beta * with.lm_mean) << beta;
    EXPECT_EQ(with.lm_mean, base.lm_mean);
    EXPECT_EQ(with.tts_mean, base.tts_mean);
  }
}

TEST(SpeechOnly, TraceIsConsistent) {
  Models m;
  Data d;
  const CycleConfig cfg = small_cycle();
  Rng rng(11);
  const SpeechOnlyTrace tr = so_loss_trace(m.view(), d.xp, cfg, rng);
  ASSERT_EQ(tr.hyps.size(), d.xs.size() * cfg.n_samples);
  for (std::size_t r = 0; r < tr.hyps.size(); ++r) {
    EXPECT_EQ(tr.utterance[r], r / cfg.n_samples);
    EXPECT_DOUBLE_EQ(tr.reward[r], tr.tts_loss[r] + cfg.beta * tr.lm_loss[r]);
    ad::NoGradGuard ng;
    EXPECT_NEAR(tr.lm_loss[r], m.lm.nll(tr.hyps[r].seq).item(), 1e-12);
    EXPECT_NEAR(tr.tts_loss[r], m.tts.teacher_forced_nll(tr.hyps[r].seq, d.xs[tr.utterance[r]]).item(),
                1e-12);
  }
}

// Recomputes the speech-only ASR gradient from the trace: leave-one-out
// centred rewards times the gradient of log p(Y_i | x), averaged.
TEST(SpeechOnly, AsrGradientMatchesLeaveOneOutOracle) {
  Models m;
  // The oracle scores with the teacher-forced NLL; with SOS carrying no mass
  // that is exactly the log-probability of the decoding distribution.
  m.asr.params().find("dec.out.bias")->mutable_value()[kSos] = -60.0;
  Data d;
  CycleConfig cfg = small_cycle();
  cfg.train_tts = false;
  for (Baseline baseline : {Baseline::kMean, Baseline::kNone}) {
    cfg.baseline = baseline;
    m.zero_grad();
    Rng rng(23);
    const SpeechOnlyTrace tr = so_loss_trace(m.view(), d.xp, cfg, rng);
    const auto got = grads(m.asr.params());

    const std::size_t N = cfg.n_samples, B = d.xs.size();
    std::vector<double> coef(N * B);
    for (std::size_t u = 0; u < B; ++u) {
      for (std::size_t i = 0; i < N; ++i) {
        double others = 0.0;
        for (std::size_t j = 0; j < N; ++j) {
          if (j != i) others += tr.reward[u * N + j];
        }
        const double b = baseline == Baseline::kMean ? others / static_cast<double>(N - 1) : 0.0;
        coef[u * N + i] = tr.reward[u * N + i] - b;
      }
    }
    m.zero_grad();
    {
      ad::Tape tape;
      ad::Tape::Scope scope(tape);
      ad::Var total(ad::Tensor::scalar(0.0));
      for (std::size_t r = 0; r < tr.hyps.size(); ++r) {
        ASSERT_LT(tr.hyps[r].seq.size(), cfg.max_hyp_len) << "fixture produced a truncated sample";
        const ad::Var logp = ad::scale(m.asr.nll(d.xs[r / N], tr.hyps[r].seq, 1.0), -1.0);
        total = ad::add(total, ad::scale(logp, coef[r] / static_cast<double>(N * B)));
      }
      tape.backward(total);
    }
    const auto want = grads(m.asr.params());
    for (std::size_t p = 0; p < want.size(); ++p) {
      for (std::size_t k = 0; k < want[p].size(); ++k) {
        EXPECT_NEAR(got[p][k], want[p][k], 1e-9 * std::max(1.0, std::abs(want[p][k])));
      }
    }
  }
}

TEST(SpeechOnly, EqualRewardsGiveNoAsrGradient) {
  Models m;
  // A single utterance whose samples are forced identical: max_hyp_len 1
  // with vocab restricted by zeroing the output layer except the EOS bias.
  for (auto& [name, v] : m.asr.params().named()) v.mutable_value().fill(0.0);
  ad::Var* bias = m.asr.params().find("dec.out.bias");
  ASSERT_NE(bias, nullptr);
  bias->mutable_value()[kEos] = -50.0;
  bias->mutable_value()[3] = 50.0;
  Data d;
  CycleConfig cfg = small_cycle();
  cfg.max_hyp_len = 2;
  cfg.train_tts = false;
  m.zero_grad();
  Rng rng(3);
  const SpeechOnlyTrace tr = so_loss_trace(m.view(), d.xp, cfg, rng);
  for (std::size_t r = 1; r < cfg.n_samples; ++r) ASSERT_EQ(tr.hyps[r].seq, tr.hyps[0].seq);
  for (const auto& g : grads(m.asr.params())) {
    for (double v : g.data()) EXPECT_EQ(v, 0.0);
  }
}

TEST(SpeechOnly, LanguageModelIsNeverUpdated) {
  Models m;
  Data d;
  const auto before = values(m.lm.params());
  Rng rng(4);
  so_loss(m.view(), d.xp, small_cycle(), rng);
  st_loss(m.view(), d.xp, d.yp, small_cycle(), rng);
  for (const auto& [name, v] : m.lm.params().named()) EXPECT_FALSE(v.has_grad()) << name;
  EXPECT_EQ(values(m.lm.params()), before);
}

TEST(SpeechOnly, TtsPathwiseGradientIsSwitchable) {
  Models m;
  Data d;
  CycleConfig cfg = small_cycle();
  cfg.train_tts = false;
  Rng rng(8);
  so_loss(m.view(), d.xp, cfg, rng);
  for (const auto& g : grads(m.tts.params())) {
    for (double v : g.data()) EXPECT_EQ(v, 0.0);
  }
  cfg.train_tts = true;
  so_loss(m.view(), d.xp, cfg, rng);
  double norm = 0.0;
  for (const auto& g : grads(m.tts.params())) {
    for (double v : g.data()) norm += v * v;
  }
  EXPECT_GT(norm, 0.0);
}

TEST(SpeechOnly, AllEmptyHypothesesAreSkipped) {
  Models m;
  for (auto& [name, v] : m.asr.params().named()) v.mutable_value().fill(0.0);
  m.asr.params().find("dec.out.bias")->mutable_value()[kEos] = 50.0;
  Data d;
  std::vector<std::string> warnings;
  const LogSink previous = set_log_sink([&](LogLevel, std::string_view msg) {
    warnings.emplace_back(msg);
  });
  Rng rng(1);
  const LossReport rep = so_loss(m.view(), d.xp, small_cycle(), rng);
  set_log_sink(previous);
  EXPECT_EQ(rep.n_used, 0u);
  EXPECT_EQ(rep.value, 0.0);
  EXPECT_EQ(warnings.size(), d.xs.size());
}

TEST(TextOnly, UnitScaleEqualsUnscaledPath) {
  Models m;
  Data d;
  CycleConfig cfg = small_cycle();
  cfg.alpha = 1.0;
  const LossReport rep = to_loss(m.view(), d.yp, cfg);
  const auto scaled = grads(m.asr.params());

  const auto synth = synthesize_for_asr(m.tts, d.yp, cfg.max_frames);
  std::vector<const FeatureSeq*> sp;
  for (const auto& x : synth) sp.push_back(&x);
  m.zero_grad();
  ad::Tape tape;
  ad::Tape::Scope scope(tape);
  const ad::Var plain = ad::mean(m.asr.nll_batch(sp, d.yp, std::nullopt));
  tape.backward(plain);
  EXPECT_EQ(rep.value, plain.item());
  EXPECT_EQ(scaled, grads(m.asr.params()));
}

TEST(TextOnly, ZeroScaleIgnoresSynthesizedFeatures) {
  Models a, b;
  // Different TTS weights produce different features of, in general,
  // different lengths; pin both to emit exactly max_frames frames by
  // disabling the stop decision through a large negative stop bias.
  for (Models* m : {&a, &b}) m->tts.params().find("out.stop.bias")->mutable_value()[0] = -50.0;
  for (auto& [name, v] : b.tts.params().named()) {
    if (name != "out.stop.bias") {
      for (double& x : v.mutable_value().data()) x = -x + 0.05;
    }
  }
  Data d;
  CycleConfig cfg = small_cycle();
  cfg.alpha = 0.0;
  const LossReport ra = to_loss(a.view(), d.yp, cfg);
  const LossReport rb = to_loss(b.view(), d.yp, cfg);
  EXPECT_EQ(ra.value, rb.value);
  EXPECT_EQ(grads(a.asr.params()), grads(b.asr.params()));
}

TEST(Combined, ValueIsSumOfParts) {
  Data d;
  const CycleConfig cfg = small_cycle();
  Models m1, m2, m3;
  Rng r1(9), r2(9);
  const LossReport st = st_loss(m1.view(), d.xp, d.yp, cfg, r1);
  const LossReport so = so_loss(m2.view(), d.xp, cfg, r2);
  const LossReport to = to_loss(m3.view(), d.yp, cfg);
  EXPECT_EQ(st.value, so.value + to.value);
  EXPECT_EQ(st.n_used, so.n_used + to.n_used);
  EXPECT_EQ(st.reward_mean, so.reward_mean);
}

TEST(Supervised, EmptyBatchIsANoOp) {
  Models m;
  EXPECT_EQ(asr_supervised_loss(m.asr, {}, {}), 0.0);
  for (const auto& [name, v] : m.asr.params().named()) EXPECT_FALSE(v.has_grad());
}

TEST(Supervised, LossesAreBatchMeans) {
  Models m;
  Data d;
  const double asr = asr_supervised_loss(m.asr, d.xp, d.yp);
  const double tts = tts_supervised_loss(m.tts, d.yp, d.xp);
  const double lm = lm_supervised_loss(m.lm, d.yp);
  ad::NoGradGuard ng;
  double a = 0, t = 0, l = 0;
  for (std::size_t i = 0; i < d.xs.size(); ++i) {
    a += m.asr.nll(d.xs[i], d.ys[i], 1.0).item();
    t += m.tts.teacher_forced_nll(d.ys[i], d.xs[i]).item();
    l += m.lm.nll(d.ys[i]).item();
  }
  EXPECT_NEAR(asr, a / 2, 1e-12);
  EXPECT_NEAR(tts, t / 2, 1e-12);
  EXPECT_NEAR(lm, l / 2, 1e-12);
  EXPECT_NEAR(supervised_loss(m.asr, d.xs[0], d.ys[0]), m.asr.nll(d.xs[0], d.ys[0], 1.0).item(), 1e-12);
}

}  // namespace
}  // namespace cyc
