// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cyc/errors.hpp"

namespace cyc::ad {

double grad_check(const std::function<Var()>& loss, std::span<Var> params, double eps) {
  if (!(eps > 0.0)) throw ContractError("grad_check: eps must be positive");

  std::vector<Tensor> analytic;
  {
    for (auto& p : params) p.zero_grad();
    Tape tape;
    Tape::Scope scope(tape);
    Var l = loss();
    if (l.value().size() != 1) throw ContractError("grad_check: function is not scalar-valued");
    const double first = l.item();
    tape.backward(l);
    for (auto& p : params) analytic.push_back(p.grad());
    double second;
    {
      NoGradGuard ng;
      second = loss().item();
    }
    if (first != second) {
      throw ContractError("grad_check: function is not deterministic (" + std::to_string(first) +
                          " vs " + std::to_string(second) + ")");
    }
  }

  NoGradGuard ng;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i].mutable_value().data();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + eps;
      const double up = loss().item();
      values[j] = saved - eps;
      const double down = loss().item();
      values[j] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[i][j];
      worst = std::max(worst, std::abs(a - numeric) / std::max(1.0, std::abs(a)));
    }
  }
  return worst;
}

double grad_check(const std::function<Var(const Var&)>& f, const Tensor& x, double eps) {
  Var probe(x, true);
  std::vector<Var> params{probe};
  return grad_check([&] { return f(probe); }, params, eps);
}

}  // namespace cyc::ad
