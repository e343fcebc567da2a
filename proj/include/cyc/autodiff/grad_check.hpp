// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>

#include "cyc/autodiff/tape.hpp"

namespace cyc::ad {

/// Compares backward() against central differences of a scalar function of
/// `params`. Returns max over all coordinates of
///   |analytic - numeric| / max(1, |analytic|).
/// `loss` must rebuild its graph from the current parameter values on every
/// call. Throws ContractError if two evaluations at the same point disagree.
double grad_check(const std::function<Var()>& loss, std::span<Var> params, double eps);

/// Single-input form: `f` maps the probe variable to a scalar.
double grad_check(const std::function<Var(const Var&)>& f, const Tensor& x, double eps);

}  // namespace cyc::ad
