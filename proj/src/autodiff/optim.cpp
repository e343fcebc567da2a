// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/autodiff/optim.hpp"

#include <cmath>

#include "cyc/errors.hpp"

namespace cyc::ad {

void zero_grad(std::vector<Var>& params) {
  for (auto& p : params) p.zero_grad();
}

double clip_grad_norm(std::vector<Var>& params, double max_norm) {
  double sq = 0.0;
  for (auto& p : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad().data()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double f = max_norm / norm;
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (double& g : p.node()->grad->data()) g *= f;
    }
  }
  return norm;
}

namespace {
void require_grads(const std::vector<Var>& params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) {
      throw ContractError("optimizer step: parameter " + std::to_string(i) + " has no gradient");
    }
    if (!params[i].grad().all_finite()) {
      throw NumericError("optimizer step: parameter " + std::to_string(i) + " has a non-finite gradient");
    }
  }
}
}  // namespace

Sgd::Sgd(std::vector<Var> params, double lr) : params_(std::move(params)), lr_(lr) {}

void Sgd::step() {
  require_grads(params_);
  for (auto& p : params_) {
    auto x = p.mutable_value().data();
    const auto g = p.grad().data();
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= lr_ * g[i];
  }
}

Adadelta::Adadelta(std::vector<Var> params, double rho, double eps, double lr)
    : params_(std::move(params)), rho_(rho), eps_(eps), lr_(lr) {
  if (!(rho > 0.0 && rho < 1.0)) throw ContractError("adadelta: rho must lie in (0, 1)");
  if (!(eps > 0.0)) throw ContractError("adadelta: eps must be positive");
  for (const auto& p : params_) {
    sq_grad_.emplace_back(p.shape());
    sq_delta_.emplace_back(p.shape());
  }
}

void Adadelta::step() {
  require_grads(params_);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto x = params_[k].mutable_value().data();
    const auto g = params_[k].grad().data();
    auto eg = sq_grad_[k].data();
    auto ed = sq_delta_[k].data();
    for (std::size_t i = 0; i < x.size(); ++i) {
      eg[i] = rho_ * eg[i] + (1.0 - rho_) * g[i] * g[i];
      const double dx = -std::sqrt(ed[i] + eps_) / std::sqrt(eg[i] + eps_) * g[i];
      ed[i] = rho_ * ed[i] + (1.0 - rho_) * dx * dx;
      x[i] += lr_ * dx;
    }
  }
}

}  // namespace cyc::ad
