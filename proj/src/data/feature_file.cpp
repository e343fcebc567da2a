// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/data/feature_file.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "cyc/errors.hpp"

namespace cyc {

namespace {

constexpr char kMagic[4] = {'E', 'A', 'T', 'F'};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_features(const FeatureSeq& x) {
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (x.frames() > kMax || x.dim() > kMax) throw ContractError("feature matrix too large for EATF");
  std::vector<std::uint8_t> out;
  out.reserve(kFeatureHeaderBytes + 4 * x.values().size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u16(out, kFeatureFileVersion);
  put_u16(out, 0);
  put_u32(out, static_cast<std::uint32_t>(x.frames()));
  put_u32(out, static_cast<std::uint32_t>(x.dim()));
  for (double v : x.values()) {
    const auto f = static_cast<float>(v);
    if (!std::isfinite(f)) throw NumericError("feature value overflows binary32");
    put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

FeatureSeq decode_features(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kFeatureHeaderBytes) {
    throw FormatError("truncated EATF header (" + std::to_string(bytes.size()) + " bytes)",
                      bytes.size());
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad EATF magic", 0);
  const std::uint16_t version = get_u16(bytes.data() + 4);
  if (version != kFeatureFileVersion) {
    throw FormatError("unsupported EATF version " + std::to_string(version), 4);
  }
  const std::size_t frames = get_u32(bytes.data() + 8);
  const std::size_t dim = get_u32(bytes.data() + 12);
  const std::size_t expected = kFeatureHeaderBytes + 4 * frames * dim;
  if (bytes.size() < expected) {
    throw FormatError("truncated EATF payload: expected " + std::to_string(expected) +
                          " bytes, file has " + std::to_string(bytes.size()),
                      bytes.size());
  }
  if (bytes.size() > expected) throw FormatError("trailing bytes after EATF payload", expected);
  std::vector<double> v(frames * dim);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t off = kFeatureHeaderBytes + 4 * i;
    const float f = std::bit_cast<float>(get_u32(bytes.data() + off));
    if (!std::isfinite(f)) throw FormatError("non-finite feature value", off);
    v[i] = f;
  }
  return FeatureSeq(frames, dim, std::move(v));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_features(const std::filesystem::path& path, const FeatureSeq& x) {
  write_file(path, encode_features(x));
}

FeatureSeq read_features(const std::filesystem::path& path) {
  return decode_features(read_file(path));
}

}  // namespace cyc
