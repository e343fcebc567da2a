// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/data/corpus.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cyc/data/feature_file.hpp"
#include "cyc/errors.hpp"

namespace cyc {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct SplitPlan {
  std::string name;
  std::size_t count;
  bool tokens;    // record keeps its labels
  bool features;  // record has a feature file
  std::string domain;
};

std::vector<SplitPlan> plan(const CorpusConfig& c) {
  return {
      {"paired", c.paired, true, true, "in"},
      {"speech_only", c.speech_only, false, true, c.speech_only_domain},
      {"text_only", c.text_only, true, false, "in"},
      {"dev", c.dev, true, true, "in"},
      {"paired_ood", c.paired_ood, true, true, "out"},
      {"dev_ood", c.dev_ood, true, true, "out"},
  };
}

std::string utt_id(const std::string& split, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05zu", i);
  return split + "-" + buf;
}

std::string join_tokens(const TokenSeq& y) {
  std::string s;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(y.ids[i]);
  }
  return s;
}

json domain_json(const DomainSpec& d) {
  json rows = json::array();
  for (int k = 0; k < d.vocab; ++k) {
    const auto p = d.prototype(k);
    rows.push_back(std::vector<double>(p.begin(), p.end()));
  }
  return {{"frames_per_token", d.frames_per_token},
          {"noise_sigma", d.noise_sigma},
          {"seed", d.seed},
          {"pattern_table", rows}};
}

DomainSpec domain_from_json(const std::string& name, const json& j, int vocab, std::size_t dim) {
  DomainSpec d;
  d.name = name;
  d.vocab = vocab;
  d.dim = dim;
  d.frames_per_token = j.at("frames_per_token").get<std::size_t>();
  d.noise_sigma = j.at("noise_sigma").get<double>();
  d.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& row : j.at("pattern_table")) {
    if (row.size() != dim) throw ShapeError("pattern table row width differs from feature_dim");
    for (const auto& v : row) d.pattern_table.push_back(v.get<double>());
  }
  d.validate();
  return d;
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) {
    throw IoError("cannot create directory '" + p.string() + "': " + ec.message());
  }
}

}  // namespace

void CorpusConfig::validate() const {
  if (vocab < 3) throw ConfigError("corpus.vocab must be at least 3");
  if (feature_dim == 0) throw ConfigError("corpus.feature_dim must be positive");
  if (min_len < 1 || min_len > max_len) throw ConfigError("corpus lengths need 1 <= min_len <= max_len");
  if (in_domain.frames_per_token < 1 || out_domain.frames_per_token < 1) {
    throw ConfigError("frames_per_token must be at least 1");
  }
  if (in_domain.noise_sigma < 0.0 || out_domain.noise_sigma < 0.0) {
    throw ConfigError("noise_sigma must be non-negative");
  }
  if (speech_only_domain != "in" && speech_only_domain != "out") {
    throw ConfigError("corpus.speech_only_domain must be \"in\" or \"out\"");
  }
}

const std::vector<std::string>& split_names() {
  static const std::vector<std::string> names = {"paired",     "speech_only", "text_only",
                                                 "dev",        "paired_ood",  "dev_ood"};
  return names;
}

const std::vector<ManifestRecord>& CorpusManifest::split(const std::string& name) const {
  auto it = splits.find(name);
  if (it == splits.end()) throw ContractError("manifest has no split '" + name + "'");
  return it->second;
}

CorpusManifest gen_corpus(const CorpusConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  ensure_dir(out_dir / "feats");

  CorpusManifest m;
  m.vocab = cfg.vocab;
  m.feature_dim = cfg.feature_dim;
  m.root = out_dir;
  m.domains.emplace("in", make_domain("in", cfg.vocab, cfg.feature_dim,
                                      cfg.in_domain.frames_per_token, cfg.in_domain.noise_sigma,
                                      derive_seed(cfg.seed, "domain.in")));
  m.domains.emplace("out", make_domain("out", cfg.vocab, cfg.feature_dim,
                                       cfg.out_domain.frames_per_token, cfg.out_domain.noise_sigma,
                                       derive_seed(cfg.seed, "domain.out")));
  const TokenSource text(cfg.vocab, cfg.min_len, cfg.max_len, derive_seed(cfg.seed, "text"));

  for (const SplitPlan& sp : plan(cfg)) {
    m.split_domain[sp.name] = sp.domain;
    auto& records = m.splits[sp.name];
    const DomainSpec& dom = m.domains.at(sp.domain);
    std::string tok_lines;
    for (std::size_t i = 0; i < sp.count; ++i) {
      ManifestRecord r;
      r.utt_id = utt_id(sp.name, i);
      const std::uint64_t useed = derive_seed(cfg.seed, r.utt_id);
      Rng rng(useed);
      TokenSeq y = text.draw(rng);
      if (sp.features) {
        r.feature_path = "feats/" + r.utt_id + ".eatf";
        write_features(out_dir / r.feature_path, synth_features(y, dom, useed));
      }
      if (sp.tokens) {
        tok_lines += join_tokens(y) + "\n";
        r.tokens = std::move(y);
      }
      records.push_back(std::move(r));
    }
    if (sp.tokens) {
      const std::string s = tok_lines;
      write_file(out_dir / (sp.name + ".tok"), std::vector<std::uint8_t>(s.begin(), s.end()));
    }
  }
  write_manifest(m, out_dir / "manifest.json");
  return m;
}

void write_manifest(const CorpusManifest& m, const fs::path& path) {
  json j;
  j["vocab_size"] = m.vocab;
  j["feature_dim"] = m.feature_dim;
  json domains = json::object();
  for (const auto& [name, d] : m.domains) domains[name] = domain_json(d);
  j["domains"] = domains;
  json split_domain = json::object();
  json token_files = json::object();
  json splits = json::object();
  for (const auto& name : split_names()) {
    auto it = m.splits.find(name);
    if (it == m.splits.end()) continue;
    split_domain[name] = m.split_domain.at(name);
    bool any_tokens = false;
    json arr = json::array();
    for (const auto& r : it->second) {
      json rec;
      rec["utt_id"] = r.utt_id;
      if (r.tokens) {
        rec["tokens"] = r.tokens->ids;
        any_tokens = true;
      }
      if (!r.feature_path.empty()) rec["feature_path"] = r.feature_path;
      arr.push_back(std::move(rec));
    }
    if (any_tokens) token_files[name] = name + ".tok";
    splits[name] = std::move(arr);
  }
  j["split_domains"] = split_domain;
  j["token_files"] = token_files;
  j["splits"] = splits;
  const std::string s = j.dump(1) + "\n";
  write_file(path, std::vector<std::uint8_t>(s.begin(), s.end()));
}

CorpusManifest read_manifest(const fs::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw FormatError("manifest '" + path.string() + "' is not valid JSON: " + e.what(), e.byte);
  }
  CorpusManifest m;
  m.root = path.parent_path();
  try {
    m.vocab = j.at("vocab_size").get<int>();
    m.feature_dim = j.at("feature_dim").get<std::size_t>();
    for (const auto& [name, dj] : j.at("domains").items()) {
      m.domains.emplace(name, domain_from_json(name, dj, m.vocab, m.feature_dim));
    }
    for (const auto& [name, dom] : j.at("split_domains").items()) {
      m.split_domain[name] = dom.get<std::string>();
    }
    std::set<std::string> seen;
    for (const auto& [name, arr] : j.at("splits").items()) {
      auto& records = m.splits[name];
      for (const auto& rj : arr) {
        ManifestRecord r;
        r.utt_id = rj.at("utt_id").get<std::string>();
        if (!seen.insert(r.utt_id).second) {
          throw FormatError("duplicate utt_id '" + r.utt_id + "' in manifest", 0);
        }
        if (rj.contains("tokens")) {
          r.tokens = TokenSeq{rj.at("tokens").get<std::vector<int>>()};
          r.tokens->validate(m.vocab);
        }
        if (rj.contains("feature_path")) {
          r.feature_path = rj.at("feature_path").get<std::string>();
          if (!fs::exists(m.root / r.feature_path)) {
            throw IoError("manifest references missing file '" +
                          (m.root / r.feature_path).string() + "'");
          }
        }
        records.push_back(std::move(r));
      }
    }
  } catch (const json::exception& e) {
    throw FormatError("manifest '" + path.string() + "': " + e.what(), 0);
  } catch (const ContractError& e) {
    throw FormatError("manifest '" + path.string() + "': " + e.what(), 0);
  }
  return m;
}

Dataset load_split(const CorpusManifest& m, const std::string& name) {
  Dataset d;
  d.name = name;
  const auto& records = m.split(name);
  bool tokens = !records.empty() && records.front().tokens.has_value();
  bool features = !records.empty() && !records.front().feature_path.empty();
  for (const auto& r : records) {
    if (r.tokens.has_value() != tokens || r.feature_path.empty() == features) {
      throw FormatError("split '" + name + "' mixes record kinds at '" + r.utt_id + "'", 0);
    }
    d.ids.push_back(r.utt_id);
    if (tokens) d.tokens.push_back(*r.tokens);
    if (features) {
      FeatureSeq x = read_features(m.root / r.feature_path);
      if (x.dim() != m.feature_dim) {
        throw FormatError("feature file '" + r.feature_path + "' has dim " +
                              std::to_string(x.dim()),
                          12);
      }
      d.features.push_back(std::move(x));
    }
  }
  return d;
}

}  // namespace cyc
