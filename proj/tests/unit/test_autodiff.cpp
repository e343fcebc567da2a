// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cyc/autodiff/grad_check.hpp"
#include "cyc/autodiff/ops.hpp"
#include "cyc/autodiff/optim.hpp"
#include "cyc/errors.hpp"

namespace cyc::ad {
namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = n(rng);
  return t;
}

TEST(Tensor, ShapeAndAccess) {
  Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.at(1, 2), 6.0);
  EXPECT_THROW(Tensor({2, 2}, {1, 2, 3}), ShapeError);
  EXPECT_EQ(Tensor::scalar(4.5).item(), 4.5);
  EXPECT_THROW(t.item(), ShapeError);
}

TEST(Tensor, AllFinite) {
  Tensor t({3}, {1, 2, 3});
  EXPECT_TRUE(t.all_finite());
  t[1] = std::nan("");
  EXPECT_FALSE(t.all_finite());
  t[1] = -INFINITY;
  EXPECT_FALSE(t.all_finite());
}

TEST(Ops, SoftmaxSpotValues) {
  NoGradGuard ng;
  const Var x(Tensor({2}, {1.0, 2.0}));
  const Tensor s = softmax(x).value();
  const Tensor ls = log_softmax(x).value();
  // 1 / (1 + e) and e / (1 + e)
  EXPECT_NEAR(s[0], 0.268941, 1e-6);
  EXPECT_NEAR(s[1], 0.731059, 1e-6);
  // -log(1 + e) and 1 - log(1 + e)
  EXPECT_NEAR(ls[0], -1.313262, 1e-6);
  EXPECT_NEAR(ls[1], -0.313262, 1e-6);
}

TEST(Ops, LogSoftmaxIsStableForLargeLogits) {
  NoGradGuard ng;
  const Var x(Tensor({3}, {1000.0, 1001.0, 999.0}));
  const Tensor ls = log_softmax(x).value();
  EXPECT_TRUE(ls.all_finite());
  double total = 0.0;
  for (double v : ls.data()) total += std::exp(v);
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Ops, MatmulMatchesLoops) {
  NoGradGuard ng;
  const Tensor a = random_tensor({3, 4}, 1), b = random_tensor({4, 2}, 2);
  const Tensor c = matmul(Var(a), Var(b)).value();
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      double ref = 0.0;
      for (std::size_t k = 0; k < 4; ++k) ref += a.at(i, k) * b.at(k, j);
      EXPECT_NEAR(c.at(i, j), ref, 1e-12);
    }
  }
  EXPECT_THROW(matmul(Var(a), Var(a)), ShapeError);
}

TEST(Ops, SuffixBroadcasting) {
  NoGradGuard ng;
  const Var a(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  const Var b(Tensor({3}, {10, 20, 30}));
  EXPECT_EQ(add(a, b).value(), Tensor({2, 3}, {11, 22, 33, 14, 25, 36}));
  EXPECT_EQ(mul(b, a).value(), Tensor({2, 3}, {10, 40, 90, 40, 100, 180}));
  EXPECT_THROW(add(a, Var(Tensor({2}, {1, 2}))), ShapeError);
}

TEST(Tape, RecordsOnlyWhenActive) {
  Var w(Tensor({2}, {1, 2}), true);
  const Var free = mul(w, w);
  EXPECT_EQ(free.value(), Tensor({2}, {1, 4}));

  Tape tape;
  {
    Tape::Scope scope(tape);
    const Var y = sum(mul(w, w));
    EXPECT_GT(tape.size(), 0u);
    {
      NoGradGuard ng;
      const std::size_t before = tape.size();
      (void)sum(mul(w, w));
      EXPECT_EQ(tape.size(), before);
    }
    tape.backward(y);
  }
  EXPECT_EQ(w.grad(), Tensor({2}, {2, 4}));
}

TEST(Tape, RepeatedBackwardAccumulatesIntoLeaves) {
  Var w(Tensor({2}, {1, 2}), true);
  Tape tape;
  Tape::Scope scope(tape);
  const Var y = sum(mul(w, w));
  tape.backward(y);
  tape.backward(y);
  EXPECT_EQ(w.grad(), Tensor({2}, {4, 8}));
}

TEST(Tape, NonFiniteForwardThrows) {
  Var w(Tensor({2}, {1e300, 1e300}), true);
  Tape tape;
  Tape::Scope scope(tape);
  EXPECT_THROW(mul(w, w), NumericError);
}

TEST(Tape, BackwardNeedsScalar) {
  Var w(Tensor({2}, {1, 2}), true);
  Tape tape;
  Tape::Scope scope(tape);
  EXPECT_THROW(tape.backward(mul(w, w)), ContractError);
}

struct UnaryCase {
  const char* name;
  Var (*fn)(const Var&);
};

class UnaryGrad : public ::testing::TestWithParam<UnaryCase> {};

TEST_P(UnaryGrad, MatchesCentralDifferences) {
  const auto fn = GetParam().fn;
  const Tensor x = random_tensor({3, 4}, 7, 0.8);
  const double err = grad_check(
      [&](const Var& v) {
        const Var y = fn(v);
        return sum(mul(y, Var(random_tensor(y.shape(), 8))));
      },
      x, 1e-5);
  EXPECT_LT(err, 1e-7) << GetParam().name;
}

INSTANTIATE_TEST_SUITE_P(
    Ops, UnaryGrad,
    ::testing::Values(UnaryCase{"tanh", [](const Var& v) { return tanh(v); }},
                      UnaryCase{"sigmoid", [](const Var& v) { return sigmoid(v); }},
                      UnaryCase{"softmax", [](const Var& v) { return softmax(v); }},
                      UnaryCase{"log_softmax", [](const Var& v) { return log_softmax(v); }},
                      UnaryCase{"scale", [](const Var& v) { return scale(v, -2.5); }},
                      UnaryCase{"sum_last", [](const Var& v) { return sum_last(v); }},
                      UnaryCase{"reshape", [](const Var& v) { return reshape(v, {4, 3}); }},
                      UnaryCase{"slice_last", [](const Var& v) { return slice_last(v, 1, 3); }}),
    [](const auto& info) { return std::string(info.param.name); });

TEST(Grad, BinaryOpsWithBroadcasting) {
  Var a(random_tensor({2, 3, 4}, 11), true);
  Var b(random_tensor({3, 4}, 12), true);
  Var c(random_tensor({4}, 13), true);
  std::vector<Var> params{a, b, c};
  const double err = grad_check(
      [&] { return sum(tanh(add(mul(a, b), sub(c, mul(b, c))))); }, params, 1e-5);
  EXPECT_LT(err, 1e-7);
}

TEST(Grad, MatmulAndSequenceOps) {
  Var x(random_tensor({2, 3, 4}, 21), true);   // [B, T, D]
  Var w(random_tensor({8, 5}, 22), true);
  Var q(random_tensor({2, 4}, 23), true);      // [B, D]
  Var table(random_tensor({6, 4}, 24), true);
  std::vector<Var> params{x, w, q, table};
  const std::vector<int> ids{3, 5};
  const std::vector<int> cols{1, 4};
  const std::vector<std::uint8_t> mask{0, 0, 1, 0, 0, 0};
  const double err = grad_check(
      [&] {
        const Var e = add_steps(x, add(q, embedding(table, ids)));           // [2,3,4]
        const Var score = sum_last(tanh(e));                                 // [2,3]
        const Var att = softmax(masked_fill(score, mask, -1e9));             // [2,3]
        const Var ctx = weighted_steps(att, x);                              // [2,4]
        const Var out = matmul(concat({ctx, select_step(x, 1)}), w);       // [2,5]
        return sum(pick(log_softmax(out), cols));
      },
      params, 1e-5);
  EXPECT_LT(err, 1e-7);
}

TEST(Grad, StackAndGather) {
  Var a(random_tensor({2, 3}, 31), true);
  Var b(random_tensor({2, 3}, 32), true);
  std::vector<Var> params{a, b};
  const std::vector<std::size_t> rows{1, 0, 1};
  const double err = grad_check(
      [&] {
        const Var s = stack_steps({a, tanh(b), mul(a, b)});  // [2,3,3]
        return sum(mul(gather_rows(reshape(s, {2, 9}), rows), gather_rows(reshape(s, {2, 9}), rows)));
      },
      params, 1e-5);
  EXPECT_LT(err, 1e-7);
}

TEST(Optim, AdadeltaFirstStep) {
  Var w(Tensor({1}, {0.0}), true);
  Adadelta opt({w}, 0.95, 1e-6);
  w.node()->grad_buffer()[0] = 1.0;
  opt.step();
  // E[g^2] = 0.05, dx = -sqrt(eps) / sqrt(0.05 + eps)
  const double oracle = -std::sqrt(1e-6) / std::sqrt(0.05 + 1e-6);
  EXPECT_NEAR(w.value()[0], oracle, 1e-15);
  EXPECT_NEAR(w.value()[0], -4.4721e-3, 1e-7);
  EXPECT_NEAR(opt.sq_grad()[0][0], 0.05, 1e-15);
  EXPECT_NEAR(opt.sq_delta()[0][0], 0.05 * oracle * oracle, 1e-18);
}

TEST(Optim, AdadeltaDescendsQuadratic) {
  Var w(Tensor({2}, {3.0, -2.0}), true);
  Adadelta opt({w}, 0.95, 1e-6);
  std::vector<Var> params{w};
  for (int i = 0; i < 2000; ++i) {
    zero_grad(params);
    Tape tape;
    Tape::Scope scope(tape);
    tape.backward(sum(mul(w, w)));
    opt.step();
  }
  EXPECT_LT(std::abs(w.value()[0]), 2.9);
  EXPECT_LT(std::abs(w.value()[1]), 1.9);
}

TEST(Optim, ClipGradNorm) {
  Var a(Tensor({2}, {0, 0}), true);
  a.node()->grad_buffer() = Tensor({2}, {3.0, 4.0});
  std::vector<Var> params{a};
  EXPECT_DOUBLE_EQ(clip_grad_norm(params, 1.0), 5.0);
  EXPECT_NEAR(a.grad()[0], 0.6, 1e-15);
  EXPECT_NEAR(a.grad()[1], 0.8, 1e-15);
  EXPECT_NEAR(clip_grad_norm(params, 10.0), 1.0, 1e-15);
  EXPECT_NEAR(a.grad()[1], 0.8, 1e-15);
}

TEST(Optim, SgdStep) {
  Var w(Tensor({1}, {1.0}), true);
  Sgd opt({w}, 0.1);
  w.node()->grad_buffer()[0] = 2.0;
  opt.step();
  EXPECT_NEAR(w.value()[0], 0.8, 1e-15);
}

TEST(GradCheck, DetectsWrongGradient) {
  // A custom op whose backward is off by a factor of two.
  const Tensor x = random_tensor({3}, 41);
  const double err = grad_check(
      [](const Var& v) {
        const Var y = record_op(v.value(), {v},
                                [](Node& n) {
                                  Tensor& g = n.inputs[0]->grad_buffer();
                                  for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * (*n.grad)[i];
                                },
                                "bad_identity");
        return sum(y);
      },
      x, 1e-5);
  EXPECT_GT(err, 0.5);
}

}  // namespace
}  // namespace cyc::ad
