// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

// EATF feature files.
//
//   offset  size  field
//   0       4     magic "EATF"
//   4       2     version (1), u16 LE
//   6       2     reserved, zero
//   8       4     n_frames, u32 LE
//   12      4     dim, u32 LE
//   16      4*n   values, IEEE-754 binary32 LE, row-major
//
// Values are narrowed to binary32 on write and widened on read.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cyc/models/types.hpp"

namespace cyc {

inline constexpr std::uint16_t kFeatureFileVersion = 1;
inline constexpr std::size_t kFeatureHeaderBytes = 16;

std::vector<std::uint8_t> encode_features(const FeatureSeq& x);
// FormatError (with byte offset) on bad magic, version, or length.
FeatureSeq decode_features(const std::vector<std::uint8_t>& bytes);

void write_features(const std::filesystem::path& path, const FeatureSeq& x);  // IoError
FeatureSeq read_features(const std::filesystem::path& path);  // IoError, FormatError

// Whole-file helpers shared with the checkpoint code.
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace cyc
