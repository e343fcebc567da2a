// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cyc {

using Rng = std::mt19937_64;

/// Derives an independent child seed from a base seed and a label, so every
/// subcomponent draws from its own stream without hidden global state.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace cyc
