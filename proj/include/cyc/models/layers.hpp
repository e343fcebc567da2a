// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cyc/autodiff/ops.hpp"
#include "cyc/models/types.hpp"
#include "cyc/rng.hpp"

namespace cyc {

/// Ordered, named parameter table. Order is creation order and is stable,
/// which keeps initialisation and checkpoints deterministic.
class ParamSet {
 public:
  ad::Var add(std::string name, ad::Shape shape, Rng& rng, double init_scale);
  std::vector<std::pair<std::string, ad::Var>>& named() { return params_; }
  const std::vector<std::pair<std::string, ad::Var>>& named() const { return params_; }
  std::vector<ad::Var> vars() const;
  std::size_t count() const;  // total scalar count
  void zero_grad();
  // Copies values from `other`; names and shapes must match.
  void assign(const ParamSet& other);
  ad::Var* find(const std::string& name);

 private:
  std::vector<std::pair<std::string, ad::Var>> params_;
};

struct Linear {
  ad::Var weight;  // [in, out]
  ad::Var bias;    // [out]

  Linear() = default;
  Linear(ParamSet& ps, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
         double scale);
  ad::Var operator()(const ad::Var& x) const { return ad::add(ad::matmul(x, weight), bias); }
};

/// GRU cell with gates ordered (reset, update, candidate):
///   r = sig(Wx_r + Uh_r), z = sig(Wx_z + Uh_z), n = tanh(Wx_n + r*(Uh_n)),
///   h' = n + z*(h - n)
struct GruCell {
  ad::Var w_ih, w_hh, b_ih, b_hh;
  std::size_t hidden = 0;

  GruCell() = default;
  GruCell(ParamSet& ps, const std::string& name, std::size_t in, std::size_t hidden, Rng& rng,
          double scale);

  // x [N, in] -> [N, 3H], bias included. Done once for a whole sequence.
  ad::Var project_input(const ad::Var& x) const;
  ad::Var step(const ad::Var& projected_x, const ad::Var& h) const;
};

/// Features packed as [B, T, D] with T the longest sequence.
struct PackedFrames {
  ad::Tensor frames;
  std::vector<std::size_t> lengths;
  std::size_t batch = 0;
  std::size_t steps = 0;
  // [B*T], 1 where the frame is padding.
  std::vector<std::uint8_t> pad_mask() const;
};
PackedFrames pack_frames(std::span<const FeatureSeq* const> xs, std::size_t dim);

// Constant [rows] vector holding 1 where `on[i]` holds, else 0.
ad::Var indicator(const std::vector<std::uint8_t>& on);

}  // namespace cyc
