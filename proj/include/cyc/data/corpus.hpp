// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cyc/data/synth.hpp"

namespace cyc {

struct DomainParams {
  std::size_t frames_per_token = 4;
  double noise_sigma = 0.1;
};

struct CorpusConfig {
  int vocab = 12;
  std::size_t feature_dim = 8;
  std::size_t min_len = 3;
  std::size_t max_len = 8;
  DomainParams in_domain{4, 0.1};
  DomainParams out_domain{5, 0.1};
  std::size_t paired = 200;
  std::size_t speech_only = 2000;
  std::size_t text_only = 2000;
  std::size_t dev = 200;
  std::size_t paired_ood = 200;
  std::size_t dev_ood = 200;
  std::string speech_only_domain = "in";  // "in" or "out"
  std::uint64_t seed = 1;

  void validate() const;  // ConfigError
};

struct ManifestRecord {
  std::string utt_id;
  std::optional<TokenSeq> tokens;
  std::string feature_path;  // relative to the manifest directory; empty for text only
};

struct CorpusManifest {
  int vocab = 0;
  std::size_t feature_dim = 0;
  std::map<std::string, DomainSpec> domains;         // "in", "out"
  std::map<std::string, std::string> split_domain;   // split -> domain name
  std::map<std::string, std::vector<ManifestRecord>> splits;
  std::filesystem::path root;  // directory holding the manifest

  const std::vector<ManifestRecord>& split(const std::string& name) const;  // ContractError
};

// Split names, in generation order.
const std::vector<std::string>& split_names();

// Deterministic per (config, utt_id). Writes <out>/manifest.json,
// <out>/<split>.tok and <out>/feats/<utt_id>.eatf.
CorpusManifest gen_corpus(const CorpusConfig& cfg, const std::filesystem::path& out_dir);

CorpusManifest read_manifest(const std::filesystem::path& path);  // IoError, FormatError
void write_manifest(const CorpusManifest& m, const std::filesystem::path& path);

// A split loaded into memory. `tokens` is empty for speech only and
// `features` for text only.
struct Dataset {
  std::string name;
  std::vector<std::string> ids;
  std::vector<TokenSeq> tokens;
  std::vector<FeatureSeq> features;

  std::size_t size() const { return ids.size(); }
  bool has_tokens() const { return !tokens.empty() || ids.empty(); }
  bool has_features() const { return !features.empty() || ids.empty(); }
};

Dataset load_split(const CorpusManifest& m, const std::string& name);

}  // namespace cyc
