// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/models/types.hpp"

#include <cmath>
#include <string>

#include "cyc/errors.hpp"

namespace cyc {

void TokenSeq::validate(int vocab) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    if (id < 0 || id >= vocab) {
      throw ContractError("token " + std::to_string(id) + " at position " + std::to_string(i) +
                          " outside [0, " + std::to_string(vocab) + ")");
    }
    if (id == kEos || id == kSos) {
      throw ContractError("reserved token " + std::to_string(id) + " inside sequence at position " +
                          std::to_string(i));
    }
  }
}

FeatureSeq::FeatureSeq(std::size_t frames, std::size_t dim)
    : frames_(frames), dim_(dim), values_(frames * dim, 0.0) {}

FeatureSeq::FeatureSeq(std::size_t frames, std::size_t dim, std::vector<double> values)
    : frames_(frames), dim_(dim), values_(std::move(values)) {
  if (values_.size() != frames * dim) {
    throw ShapeError("feature matrix " + std::to_string(frames) + "x" + std::to_string(dim) +
                     " given " + std::to_string(values_.size()) + " values");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw NumericError("feature matrix holds a non-finite value");
  }
}

}  // namespace cyc
