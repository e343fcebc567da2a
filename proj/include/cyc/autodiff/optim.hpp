// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "cyc/autodiff/tape.hpp"

namespace cyc::ad {

void zero_grad(std::vector<Var>& params);

// Scales all grads so their joint L2 norm is at most `max_norm`.
// Returns the norm before clipping.
double clip_grad_norm(std::vector<Var>& params, double max_norm);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step() = 0;
};

/// Plain gradient descent.
class Sgd final : public Optimizer {
 public:
  Sgd(std::vector<Var> params, double lr);
  void step() override;

 private:
  std::vector<Var> params_;
  double lr_;
};

/// Adadelta (Zeiler 2012). Per coordinate:
///   E[g^2]  <- rho E[g^2] + (1-rho) g^2
///   dx      = -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
///   E[dx^2] <- rho E[dx^2] + (1-rho) dx^2
///   x       <- x + lr * dx
/// Accumulators persist across steps and can be saved/restored.
class Adadelta final : public Optimizer {
 public:
  Adadelta(std::vector<Var> params, double rho, double eps, double lr = 1.0);
  void step() override;

  std::vector<Tensor>& sq_grad() { return sq_grad_; }
  std::vector<Tensor>& sq_delta() { return sq_delta_; }
  const std::vector<Var>& params() const { return params_; }

 private:
  std::vector<Var> params_;
  double rho_;
  double eps_;
  double lr_;
  std::vector<Tensor> sq_grad_;
  std::vector<Tensor> sq_delta_;
};

}  // namespace cyc::ad
