// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cyc/anneal/schedule.hpp"
#include "cyc/data/synth.hpp"
#include "cyc/errors.hpp"

namespace cyc {
namespace {

Schedule make(ScheduleKind kind, std::size_t total, int k = 10) {
  Schedule s;
  s.kind = kind;
  s.total_steps = total;
  s.class_count = k;
  return s;
}

// Roots of exp(5(x - 1)) = x and 1 - exp(-5x) = x on (0, 1).
constexpr double kLowCross = 0.0069771536511413455;
constexpr double kHighCross = 0.9930228463485136;

constexpr ScheduleKind kKinds[] = {ScheduleKind::kLog, ScheduleKind::kLinear, ScheduleKind::kExp};

TEST(Eta, SpotValues) {
  const std::size_t T = 1000;
  EXPECT_NEAR(eta(make(ScheduleKind::kExp, T), T / 2), 0.08208, 1e-5);
  EXPECT_NEAR(eta(make(ScheduleKind::kLog, T), T / 2), 0.91792, 1e-5);
  EXPECT_DOUBLE_EQ(eta(make(ScheduleKind::kLinear, T), T / 2), 0.5);
  // Direct evaluation oracles.
  EXPECT_DOUBLE_EQ(eta(make(ScheduleKind::kExp, T), T / 2), std::exp(-2.5));
  EXPECT_DOUBLE_EQ(eta(make(ScheduleKind::kLog, T), T / 2), 1.0 - std::exp(-2.5));
}

TEST(Eta, Endpoints) {
  const std::size_t T = 40;
  EXPECT_EQ(eta(make(ScheduleKind::kLinear, T), 0), 0.0);
  EXPECT_EQ(eta(make(ScheduleKind::kLog, T), 0), 0.0);
  EXPECT_NEAR(eta(make(ScheduleKind::kExp, T), 0), 0.00674, 1e-5);
  EXPECT_NEAR(eta(make(ScheduleKind::kLog, T), T), 0.99326, 1e-5);
  EXPECT_EQ(eta(make(ScheduleKind::kLinear, T), T), 1.0);
  EXPECT_EQ(eta(make(ScheduleKind::kExp, T), T), 1.0);
}

TEST(Eta, BeyondHorizonThrows) {
  EXPECT_THROW(eta(make(ScheduleKind::kExp, 10), 11), ContractError);
  EXPECT_THROW(gamma(make(ScheduleKind::kLog, 10), 11), ContractError);
  Schedule bad = make(ScheduleKind::kExp, 0);
  EXPECT_THROW(eta(bad, 0), ContractError);
  bad = make(ScheduleKind::kExp, 5, 1);
  EXPECT_THROW(gamma(bad, 0), ContractError);
}

TEST(Gamma, SpotValues) {
  // Linear schedule at t = T/2 gives eta = 0.5.
  EXPECT_DOUBLE_EQ(gamma(make(ScheduleKind::kLinear, 2, 10), 1), 0.55);
  EXPECT_DOUBLE_EQ(gamma(make(ScheduleKind::kLinear, 2, 10), 0), 0.1);
  EXPECT_DOUBLE_EQ(gamma(make(ScheduleKind::kLinear, 2, 10), 2), 1.0);
  // e^-5 * 0.9 + 0.1
  EXPECT_NEAR(gamma(make(ScheduleKind::kExp, 100, 10), 0), 0.106064, 1e-6);
  Schedule lit = make(ScheduleKind::kLinear, 2, 10);
  lit.gamma_literal = true;
  EXPECT_DOUBLE_EQ(gamma(lit, 1), 0.5);
}

TEST(Gamma, LargeClassCountApproachesEta) {
  const Schedule s = make(ScheduleKind::kLinear, 4, 1'000'000);
  EXPECT_NEAR(gamma(s, 1), 0.25, 1e-6);
}

TEST(ScheduleProperty, MonotoneBoundedAndOrdered) {
  for (std::size_t T : {1u, 2u, 7u, 100u, 5000u}) {
    for (int K : {2, 3, 12, 100}) {
      double prev_eta[3] = {-1, -1, -1}, prev_gamma[3] = {-1, -1, -1};
      for (std::size_t t = 0; t <= T; ++t) {
        double e[3];
        for (int k = 0; k < 3; ++k) {
          const Schedule s = make(kKinds[k], T, K);
          e[k] = eta(s, t);
          const double g = gamma(s, t);
          EXPECT_GE(e[k], prev_eta[k]);
          EXPECT_GE(g, prev_gamma[k]);
          EXPECT_GE(e[k], 0.0);
          EXPECT_LE(e[k], 1.0);
          EXPECT_GE(g, 1.0 / K - 1e-15);
          EXPECT_LE(g, 1.0);
          prev_eta[k] = e[k];
          prev_gamma[k] = g;
        }
        // exp starts at e^-5 and log ends at 1 - e^-5, so the strict
        // ordering exp < linear < log holds only away from both ends.
        const double x = static_cast<double>(t) / static_cast<double>(T);
        if (x > kLowCross && x < kHighCross) {
          EXPECT_LT(e[2], e[1]) << "T=" << T << " t=" << t;
          EXPECT_LT(e[1], e[0]) << "T=" << T << " t=" << t;
        }
        if (x < kLowCross) EXPECT_GT(e[2], e[1]) << "T=" << T << " t=" << t;
        if (x > kHighCross) EXPECT_LT(e[0], e[1]) << "T=" << T << " t=" << t;
      }
    }
  }
}

TEST(Release, BoundaryAndDirection) {
  Schedule s = make(ScheduleKind::kLinear, 2, 10);
  const double g = gamma(s, 1);
  EXPECT_TRUE(release(g, s, 1));
  EXPECT_FALSE(release(std::nextafter(g, 1.0), s, 1));
  EXPECT_TRUE(release(1.0, s, 2));
  EXPECT_FALSE(release(0.9, make(ScheduleKind::kExp, 100, 10), 0));
  s.direction = ReleaseDirection::kAboveThreshold;
  EXPECT_FALSE(release(g, s, 1));
  EXPECT_TRUE(release(std::nextafter(g, 1.0), s, 1));
}

TEST(Release, MonotoneInStep) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (ScheduleKind kind : kKinds) {
    const Schedule s = make(kind, 200, 12);
    for (int trial = 0; trial < 200; ++trial) {
      const double p = u(rng);
      bool released = false;
      for (std::size_t t = 0; t <= 200; ++t) {
        const bool now = release(p, s, t);
        if (released) EXPECT_TRUE(now) << p << " " << t;
        released = released || now;
      }
    }
  }
}

TEST(ScheduleKindNames, RoundTrip) {
  for (ScheduleKind k : kKinds) EXPECT_EQ(parse_schedule_kind(to_string(k)), k);
  EXPECT_THROW(parse_schedule_kind("cosine"), ConfigError);
}

struct Pairs {
  DomainSpec domain = make_domain("in", 6, 3, 2, 0.1, 2);
  std::vector<TokenSeq> ys{{{2, 3}}, {{4}}, {{5, 2, 3}}, {{3, 3}}};
  std::vector<FeatureSeq> xs;
  std::vector<const FeatureSeq*> xp;
  std::vector<const TokenSeq*> yp;
  Pairs() {
    for (std::size_t i = 0; i < ys.size(); ++i) xs.push_back(synth_features(ys[i], domain, i));
    for (const auto& x : xs) xp.push_back(&x);
    for (const auto& y : ys) yp.push_back(&y);
  }
};

AsrConfig tiny_asr() {
  AsrConfig c;
  c.vocab = 6;
  c.feat_dim = 3;
  c.enc_hidden = 4;
  c.dec_hidden = 5;
  c.embed = 3;
  c.att_dim = 4;
  c.seed = 12;
  return c;
}

TEST(Filter, ConfidenceIsGeometricMeanProbability) {
  Pairs d;
  AsrModel asr(tiny_asr());
  const auto p = confidence(asr, d.xp, d.yp);
  ad::NoGradGuard ng;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double nll = asr.nll(d.xs[i], d.ys[i], 1.0).item();
    EXPECT_NEAR(p[i], std::exp(-nll / (d.ys[i].size() + 1.0)), 1e-15);
  }
}

TEST(Filter, UntrainedModelReleasesEverything) {
  Pairs d;
  AsrModel asr(tiny_asr());
  for (ScheduleKind kind : kKinds) {
    const Schedule s = make(kind, 50, 6);
    for (std::size_t t : {0u, 25u, 50u}) {
      const Released r = filter_supervised(asr, d.xp, d.yp, s, t);
      // Small random init keeps p_conf close to chance, which is gamma's floor.
      for (double p : r.p_conf) ASSERT_LT(p, 1.0 / 6 + 0.01);
      EXPECT_LE(r.index.size(), d.xs.size());
      for (std::size_t k = 1; k < r.index.size(); ++k) EXPECT_LT(r.index[k - 1], r.index[k]);
    }
  }
}

TEST(Filter, EmptyBatch) {
  AsrModel asr(tiny_asr());
  const Released r = filter_supervised(asr, {}, {}, make(ScheduleKind::kExp, 5), 0);
  EXPECT_TRUE(r.index.empty());
  EXPECT_EQ(r.fraction(), 0.0);
}

}  // namespace
}  // namespace cyc
