// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "cyc/models/types.hpp"
#include "cyc/rng.hpp"

namespace cyc {

enum class MaskFill { kUtteranceMean, kZero };

struct MaskBands {
  std::size_t channel_begin = 0, channel_width = 0;
  std::size_t frame_begin = 0, frame_width = 0;
};

// One channel band of width ~ U{0..f_width} and one frame band of width
// ~ U{0..t_width} (widths clamped to the matrix), each at a uniform position,
// overwritten with the fill value. `bands`, when given, receives the choice.
FeatureSeq augment(const FeatureSeq& x, std::size_t f_width, std::size_t t_width, Rng& rng,
                   MaskFill fill = MaskFill::kUtteranceMean, MaskBands* bands = nullptr);

}  // namespace cyc
