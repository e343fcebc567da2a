// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/autodiff/tape.hpp"

#include <string>

#include "cyc/errors.hpp"

namespace cyc::ad {

namespace {
thread_local Tape* active_tape = nullptr;
}

Tensor& Node::grad_buffer() {
  if (!grad) grad.emplace(value.shape());
  return *grad;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  if (!value.all_finite()) throw NumericError("leaf tensor holds non-finite values");
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

const Tensor& Var::grad() const {
  if (!node_->grad) throw ContractError("gradient requested before backward");
  return *node_->grad;
}

void Var::zero_grad() {
  if (node_->grad) {
    node_->grad->fill(0.0);
  } else {
    node_->grad.emplace(node_->value.shape());
  }
}

Tape::Scope::Scope(Tape& tape) : previous_(active_tape) { active_tape = &tape; }
Tape::Scope::~Scope() { active_tape = previous_; }

Tape* Tape::active() { return active_tape; }

NoGradGuard::NoGradGuard() : previous_(active_tape) { active_tape = nullptr; }
NoGradGuard::~NoGradGuard() { active_tape = previous_; }

void Tape::record(const std::shared_ptr<Node>& node) {
  node->tape = this;
  nodes_.push_back(node);
}

void Tape::backward(const Var& loss) {
  if (!loss.valid()) throw ContractError("backward on an empty Var");
  if (loss.value().size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        to_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;  // nothing upstream needs a gradient
  if (loss.node()->tape != this) {
    throw ContractError("loss was not recorded on this tape");
  }
  for (auto& n : nodes_) n->grad.reset();
  loss.node()->grad_buffer()[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = **it;
    if (!n.grad || !n.backward) continue;
    n.backward(n);
  }
  for (auto& n : nodes_) {
    for (auto& in : n->inputs) {
      if (in->requires_grad && !in->tape && in->grad && !in->grad->all_finite()) {
        throw NumericError("non-finite gradient flowing out of op '" + std::string(n->op) + "'");
      }
    }
  }
}

void backward(const Var& loss) {
  if (!loss.valid()) throw ContractError("backward on an empty Var");
  if (loss.value().size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " + to_string(loss.shape()));
  }
  const Tape* t = loss.node()->tape;
  if (!t) {
    if (!loss.requires_grad()) return;
    // A requires_grad leaf used directly as the loss.
    loss.node()->grad_buffer()[0] += 1.0;
    return;
  }
  const_cast<Tape*>(t)->backward(loss);
}

Var record_op(Tensor value, std::vector<Var> inputs, BackwardFn fn, std::string_view name) {
  if (!value.all_finite()) {
    throw NumericError("op '" + std::string(name) + "' produced a non-finite value");
  }
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = name;
  Tape* tape = active_tape;
  bool needs = false;
  if (tape) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->backward = std::move(fn);
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.ptr());
    tape->record(node);
  }
  return Var(std::move(node));
}

}  // namespace cyc::ad
