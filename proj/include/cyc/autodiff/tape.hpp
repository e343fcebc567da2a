// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

// Reverse-mode differentiation over dense tensors.
//
// A Tape records every op whose result requires a gradient, in execution
// order, so the record is topologically sorted by construction. Ops record
// onto the tape that is active on the calling thread (see Tape::Scope); with
// no active tape, or under NoGradGuard, results are plain values.

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "cyc/autodiff/tensor.hpp"

namespace cyc::ad {

class Tape;

struct Node {
  Tensor value;
  std::optional<Tensor> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into the grads of `inputs`.
  std::function<void(Node&)> backward;
  std::string_view op = "leaf";
  const Tape* tape = nullptr;

  // Grad buffer, zero-initialised on first use.
  Tensor& grad_buffer();
};

/// Handle to a node in the computation graph. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Tensor& value() const { return node_->value; }
  // Direct access for optimizers and finite-difference probes.
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  double item() const { return node_->value.item(); }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool has_grad() const { return node_->grad.has_value(); }
  const Tensor& grad() const;
  void zero_grad();
  void clear_grad() { node_->grad.reset(); }

  bool valid() const { return static_cast<bool>(node_); }
  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& ptr() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Makes `tape` the active tape on this thread for the scope's lifetime.
  class Scope {
   public:
    explicit Scope(Tape& tape);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* previous_;
  };

  static Tape* active();

  void record(const std::shared_ptr<Node>& node);
  std::size_t size() const { return nodes_.size(); }

  // Populates grads of every requires_grad leaf reachable from `loss`.
  // Intermediate grads are reset on entry, so calling backward again on the
  // same tape accumulates into leaves exactly once more.
  void backward(const Var& loss);

 private:
  friend class NoGradGuard;
  std::vector<std::shared_ptr<Node>> nodes_;
};

/// Suspends recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  Tape* previous_;
};

/// Backward on the tape `loss` was recorded on.
void backward(const Var& loss);

using BackwardFn = std::function<void(Node&)>;

/// Builds an op result. Records it on the active tape when any input requires
/// a gradient; `fn` then runs during backward. Throws NumericError if `value`
/// holds a NaN or Inf.
Var record_op(Tensor value, std::vector<Var> inputs, BackwardFn fn, std::string_view name);

}  // namespace cyc::ad
