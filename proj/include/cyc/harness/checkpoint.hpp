// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

// EATC checkpoint files: a flat, ordered table of named binary64 tensors.
//
//   "EATC" | version u16 | entry count u32 | entries...
//   entry: name length u16 | UTF-8 name | rank u8 | dims u32 x rank | values f64 x prod(dims)
//
// All integers little-endian. Model parameters live under "asr/", "tts/" and
// "lm/", optimizer accumulators under "opt/", and scalar bookkeeping
// (architecture sizes, step, config hash) under "meta/" as rank-0 entries.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cyc/autodiff/optim.hpp"
#include "cyc/models/asr.hpp"
#include "cyc/models/lm.hpp"
#include "cyc/models/tts.hpp"

namespace cyc {

inline constexpr std::uint16_t kCheckpointVersion = 1;

class Checkpoint {
 public:
  void put(const std::string& name, ad::Tensor value);  // replaces an existing entry
  void put_scalar(const std::string& name, double v) { put(name, ad::Tensor::scalar(v)); }
  const ad::Tensor* find(const std::string& name) const;
  const ad::Tensor& at(const std::string& name) const;  // FormatError if absent
  double scalar(const std::string& name) const;
  bool has_prefix(const std::string& prefix) const;

  const std::vector<std::pair<std::string, ad::Tensor>>& entries() const { return entries_; }

  std::uint64_t step() const;
  void set_step(std::uint64_t step);
  std::uint64_t config_hash() const;
  void set_config_hash(std::uint64_t h);

 private:
  std::vector<std::pair<std::string, ad::Tensor>> entries_;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);  // FormatError
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void store(Checkpoint& c, const AsrModel& m);
void store(Checkpoint& c, const TtsModel& m);
void store(Checkpoint& c, const LmModel& m);
// Null when the checkpoint holds no such model.
std::unique_ptr<AsrModel> restore_asr(const Checkpoint& c);
std::unique_ptr<TtsModel> restore_tts(const Checkpoint& c);
std::unique_ptr<LmModel> restore_lm(const Checkpoint& c);

// Adadelta accumulators of the parameters of `ps`, under "opt/<group>/".
void store_optimizer(Checkpoint& c, const std::string& group, const ParamSet& ps,
                     ad::Adadelta& opt);
bool restore_optimizer(const Checkpoint& c, const std::string& group, const ParamSet& ps,
                       ad::Adadelta& opt);

}  // namespace cyc
