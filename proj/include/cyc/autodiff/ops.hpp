// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

// Differentiable tensor ops. Elementwise binary ops broadcast only over a
// leading extent: the smaller operand's shape must equal a trailing suffix of
// the larger one's. Anything else is a ShapeError naming both shapes.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cyc/autodiff/tape.hpp"

namespace cyc::ad {

Var constant(Tensor value);

Var matmul(const Var& a, const Var& b);  // [m,k] x [k,n]
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);

Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var relu(const Var& a);

Var softmax(const Var& a);      // last axis
Var log_softmax(const Var& a);  // last axis

// Rows of `a` viewed as [a.dim(0), rest...]; indices may repeat.
Var gather_rows(const Var& a, std::span<const std::size_t> rows);
// Rows of an embedding table [K, E]; throws ContractError on id >= K.
Var embedding(const Var& table, std::span<const int> ids);

Var concat(const std::vector<Var>& parts);  // last axis

Var sum(const Var& a);   // -> scalar
Var mean(const Var& a);  // -> scalar
Var sum_last(const Var& a);  // [..., n] -> [...]

// Entries where mask != 0 are replaced by `value` and receive no gradient.
Var masked_fill(const Var& a, std::span<const std::uint8_t> mask, double value);

// Structural helpers used by the sequence models.
Var reshape(const Var& a, Shape shape);
Var slice_last(const Var& a, std::size_t begin, std::size_t end);
Var select_step(const Var& a, std::size_t t);              // [B,T,D] -> [B,D]
Var stack_steps(const std::vector<Var>& steps);            // T x [B,D] -> [B,T,D]
Var add_steps(const Var& a, const Var& b);                 // [B,T,D] + [B,D]
Var weighted_steps(const Var& w, const Var& h);            // [B,T] . [B,T,D] -> [B,D]
Var pick(const Var& a, std::span<const int> cols);         // [B,K] -> [B], a[b, cols[b]]

}  // namespace cyc::ad
