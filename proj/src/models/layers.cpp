// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/models/layers.hpp"

#include <algorithm>

#include "cyc/errors.hpp"

namespace cyc {

using namespace ad;

Var ParamSet::add(std::string name, Shape shape, Rng& rng, double init_scale) {
  Tensor t(shape);
  std::uniform_real_distribution<double> dist(-init_scale, init_scale);
  for (double& v : t.data()) v = dist(rng);
  Var v(std::move(t), true);
  params_.emplace_back(std::move(name), v);
  return v;
}

std::vector<Var> ParamSet::vars() const {
  std::vector<Var> out;
  out.reserve(params_.size());
  for (const auto& [_, v] : params_) out.push_back(v);
  return out;
}

std::size_t ParamSet::count() const {
  std::size_t n = 0;
  for (const auto& [_, v] : params_) n += v.value().size();
  return n;
}

void ParamSet::zero_grad() {
  for (auto& [_, v] : params_) v.zero_grad();
}

void ParamSet::assign(const ParamSet& other) {
  if (other.params_.size() != params_.size()) throw ShapeError("parameter tables differ in size");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].first != other.params_[i].first ||
        params_[i].second.shape() != other.params_[i].second.shape()) {
      throw ShapeError("parameter '" + params_[i].first + "' does not match '" +
                       other.params_[i].first + "'");
    }
    params_[i].second.mutable_value() = other.params_[i].second.value();
  }
}

Var* ParamSet::find(const std::string& name) {
  for (auto& [n, v] : params_) {
    if (n == name) return &v;
  }
  return nullptr;
}

Linear::Linear(ParamSet& ps, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
               double scale)
    : weight(ps.add(name + ".weight", {in, out}, rng, scale)),
      bias(ps.add(name + ".bias", {out}, rng, scale)) {}

GruCell::GruCell(ParamSet& ps, const std::string& name, std::size_t in, std::size_t h, Rng& rng,
                 double scale)
    : w_ih(ps.add(name + ".w_ih", {in, 3 * h}, rng, scale)),
      w_hh(ps.add(name + ".w_hh", {h, 3 * h}, rng, scale)),
      b_ih(ps.add(name + ".b_ih", {3 * h}, rng, scale)),
      b_hh(ps.add(name + ".b_hh", {3 * h}, rng, scale)),
      hidden(h) {}

Var GruCell::project_input(const Var& x) const { return add(matmul(x, w_ih), b_ih); }

Var GruCell::step(const Var& gi, const Var& h) const {
  const std::size_t H = hidden;
  Var gh = add(matmul(h, w_hh), b_hh);
  Var r = sigmoid(add(slice_last(gi, 0, H), slice_last(gh, 0, H)));
  Var z = sigmoid(add(slice_last(gi, H, 2 * H), slice_last(gh, H, 2 * H)));
  Var n = ad::tanh(add(slice_last(gi, 2 * H, 3 * H), mul(r, slice_last(gh, 2 * H, 3 * H))));
  return add(n, mul(z, sub(h, n)));
}

std::vector<std::uint8_t> PackedFrames::pad_mask() const {
  std::vector<std::uint8_t> m(batch * steps, 0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = lengths[b]; t < steps; ++t) m[b * steps + t] = 1;
  }
  return m;
}

PackedFrames pack_frames(std::span<const FeatureSeq* const> xs, std::size_t dim) {
  if (xs.empty()) throw ContractError("empty batch");
  PackedFrames p;
  p.batch = xs.size();
  for (const auto* x : xs) {
    if (x->dim() != dim) {
      throw ShapeError("feature dim " + std::to_string(x->dim()) + " does not match model dim " +
                       std::to_string(dim));
    }
    if (x->frames() == 0) throw ContractError("feature sequence has no frames");
    p.lengths.push_back(x->frames());
    p.steps = std::max(p.steps, x->frames());
  }
  p.frames = Tensor({p.batch, p.steps, dim});
  auto out = p.frames.data();
  for (std::size_t b = 0; b < p.batch; ++b) {
    const auto& v = xs[b]->values();
    std::copy(v.begin(), v.end(), out.begin() + b * p.steps * dim);
  }
  return p;
}

Var indicator(const std::vector<std::uint8_t>& on) {
  Tensor t({on.size()});
  for (std::size_t i = 0; i < on.size(); ++i) t[i] = on[i] ? 1.0 : 0.0;
  return constant(std::move(t));
}

}  // namespace cyc
