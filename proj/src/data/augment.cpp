// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/data/augment.hpp"

#include <algorithm>
#include <numeric>

namespace cyc {

namespace {

// Width in [0, min(max_width, extent)], then a start that keeps the band inside.
std::pair<std::size_t, std::size_t> draw_band(std::size_t max_width, std::size_t extent, Rng& rng) {
  const std::size_t limit = std::min(max_width, extent);
  const std::size_t width = std::uniform_int_distribution<std::size_t>(0, limit)(rng);
  const std::size_t begin = std::uniform_int_distribution<std::size_t>(0, extent - width)(rng);
  return {begin, width};
}

}  // namespace

FeatureSeq augment(const FeatureSeq& x, std::size_t f_width, std::size_t t_width, Rng& rng,
                   MaskFill fill, MaskBands* bands) {
  FeatureSeq out = x;
  const std::size_t T = x.frames(), D = x.dim();
  if (T == 0 || D == 0) return out;
  double value = 0.0;
  if (fill == MaskFill::kUtteranceMean) {
    const auto& v = x.values();
    value = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  }
  const auto [c0, cw] = draw_band(f_width, D, rng);
  const auto [t0, tw] = draw_band(t_width, T, rng);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t d = c0; d < c0 + cw; ++d) out.at(t, d) = value;
  }
  for (std::size_t t = t0; t < t0 + tw; ++t) {
    for (std::size_t d = 0; d < D; ++d) out.at(t, d) = value;
  }
  if (bands) *bands = {c0, cw, t0, tw};
  return out;
}

}  // namespace cyc
