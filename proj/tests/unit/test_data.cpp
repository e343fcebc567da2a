// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cyc/data/augment.hpp"
#include "cyc/data/corpus.hpp"
#include "cyc/data/feature_file.hpp"
#include "cyc/data/synth.hpp"
#include "cyc/errors.hpp"
#include "temp_dir.hpp"

namespace cyc {
namespace {

using cyc::testing::TempDir;

TEST(Synth, LengthLawAndShape) {
  const DomainSpec d = make_domain("in", 12, 8, 4, 0.1, 1);
  EXPECT_EQ(d.pattern_table.size(), 12u * 8u);
  const FeatureSeq x = synth_features(TokenSeq{{2, 7, 11}}, d, 5);
  EXPECT_EQ(x.frames(), 12u);
  EXPECT_EQ(x.dim(), 8u);
  EXPECT_THROW(synth_features(TokenSeq{}, d, 5), ContractError);
  EXPECT_THROW(synth_features(TokenSeq{{12}}, d, 5), ContractError);
}

TEST(Synth, ZeroNoiseRepeatsPrototypes) {
  const DomainSpec d = make_domain("in", 6, 3, 2, 0.0, 4);
  const TokenSeq y{{3, 5}};
  const FeatureSeq x = synth_features(y, d, 0);
  for (std::size_t t = 0; t < x.frames(); ++t) {
    const auto proto = d.prototype(y.ids[t / 2]);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(x.at(t, k), proto[k]);
  }
}

TEST(Synth, DeterministicPerUtteranceSeed) {
  const DomainSpec d = make_domain("in", 6, 3, 2, 0.3, 4);
  const TokenSeq y{{3, 5, 2}};
  EXPECT_EQ(synth_features(y, d, 9), synth_features(y, d, 9));
  EXPECT_NE(synth_features(y, d, 9), synth_features(y, d, 10));
}

TEST(Synth, NearestPrototypeRecoversTokens) {
  const DomainSpec d = make_domain("in", 12, 8, 4, 0.1, 1);
  const TokenSource src(12, 3, 8, 2);
  Rng rng(3);
  std::size_t right = 0, total = 0;
  for (int u = 0; u < 200; ++u) {
    const TokenSeq y = src.draw(rng);
    const FeatureSeq x = synth_features(y, d, static_cast<std::uint64_t>(u));
    for (std::size_t t = 0; t < x.frames(); ++t) {
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int k = 2; k < 12; ++k) {
        double dist = 0.0;
        for (std::size_t c = 0; c < 8; ++c) dist += std::pow(x.at(t, c) - d.prototype(k)[c], 2);
        if (dist < best_d) {
          best_d = dist;
          best = k;
        }
      }
      right += best == y.ids[t / 4];
      ++total;
    }
  }
  EXPECT_GT(static_cast<double>(right) / static_cast<double>(total), 0.99);
}

TEST(TokenSource, DrawsContentTokensWithinLengthRange) {
  const TokenSource src(12, 3, 8, 7);
  Rng rng(1);
  std::set<std::size_t> lengths;
  for (int i = 0; i < 500; ++i) {
    const TokenSeq y = src.draw(rng);
    EXPECT_NO_THROW(y.validate(12));
    EXPECT_GE(y.size(), 3u);
    EXPECT_LE(y.size(), 8u);
    lengths.insert(y.size());
  }
  EXPECT_EQ(lengths.size(), 6u);
  for (int prev : {kSos, 2, 11}) {
    const auto row = src.transition(prev);
    double total = 0.0;
    for (int k = 0; k < 12; ++k) {
      if (k < 2) EXPECT_EQ(row[k], 0.0);
      total += row[k];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(FeatureFile, SizeAndRoundTrip) {
  std::vector<double> v(15);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.1 * static_cast<double>(i) - 0.7;
  const FeatureSeq x(5, 3, v);
  const auto bytes = encode_features(x);
  EXPECT_EQ(bytes.size(), 16u + 60u);
  EXPECT_EQ(bytes[0], 'E');
  EXPECT_EQ(bytes[3], 'F');
  const FeatureSeq back = decode_features(bytes);
  ASSERT_EQ(back.frames(), 5u);
  ASSERT_EQ(back.dim(), 3u);
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(back.values()[i], static_cast<double>(static_cast<float>(v[i])));
  }

  TempDir dir("feat");
  write_features(dir / "a.eatf", x);
  EXPECT_EQ(read_features(dir / "a.eatf"), back);
  EXPECT_EQ(std::filesystem::file_size(dir / "a.eatf"), 76u);
}

std::uint64_t error_offset(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_features(bytes);
  } catch (const FormatError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "no FormatError";
  return 0;
}

TEST(FeatureFile, CorruptionReportsOffsets) {
  const FeatureSeq x(2, 2, {1, 2, 3, 4});
  const auto good = encode_features(x);

  auto bad_magic = good;
  bad_magic[1] = 'X';
  EXPECT_EQ(error_offset(bad_magic), 0u);

  auto bad_version = good;
  bad_version[4] = 9;
  EXPECT_EQ(error_offset(bad_version), 4u);

  EXPECT_EQ(error_offset(std::vector<std::uint8_t>(good.begin(), good.begin() + 10)), 10u);

  auto truncated = good;
  truncated.pop_back();
  EXPECT_EQ(error_offset(truncated), truncated.size());

  auto trailing = good;
  trailing.push_back(0);
  EXPECT_EQ(error_offset(trailing), good.size());

  auto nan = good;
  const std::uint32_t bits = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN());
  for (int k = 0; k < 4; ++k) nan[16 + 4 + k] = static_cast<std::uint8_t>(bits >> (8 * k));
  EXPECT_EQ(error_offset(nan), 20u);
}

TEST(FeatureFile, MissingFileIsIoError) {
  EXPECT_THROW(read_features("/nonexistent/dir/x.eatf"), IoError);
}

CorpusConfig small_corpus() {
  CorpusConfig c;
  c.paired = 6;
  c.speech_only = 5;
  c.text_only = 4;
  c.dev = 3;
  c.paired_ood = 2;
  c.dev_ood = 2;
  c.seed = 42;
  return c;
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) { return read_file(p); }

TEST(Corpus, SplitSizesAndRecordKinds) {
  TempDir dir("corpus");
  const CorpusConfig cfg = small_corpus();
  const CorpusManifest m = gen_corpus(cfg, dir.path());
  EXPECT_EQ(m.split("paired").size(), 6u);
  EXPECT_EQ(m.split("speech_only").size(), 5u);
  EXPECT_EQ(m.split("text_only").size(), 4u);
  EXPECT_EQ(m.split("dev").size(), 3u);
  EXPECT_EQ(m.split("paired_ood").size(), 2u);
  EXPECT_EQ(m.split("dev_ood").size(), 2u);
  EXPECT_THROW(m.split("nope"), ContractError);
  for (const auto& r : m.split("speech_only")) {
    EXPECT_FALSE(r.tokens.has_value());
    EXPECT_FALSE(r.feature_path.empty());
  }
  for (const auto& r : m.split("text_only")) {
    EXPECT_TRUE(r.tokens.has_value());
    EXPECT_TRUE(r.feature_path.empty());
  }
  std::set<std::string> ids;
  std::size_t n = 0;
  for (const auto& name : split_names()) {
    for (const auto& r : m.split(name)) {
      ids.insert(r.utt_id);
      ++n;
    }
  }
  EXPECT_EQ(ids.size(), n);
  EXPECT_EQ(m.split_domain.at("paired_ood"), "out");
  EXPECT_EQ(m.split_domain.at("paired"), "in");
}

TEST(Corpus, LengthLawAcrossDomains) {
  TempDir dir("corpus");
  const CorpusConfig cfg = small_corpus();
  const CorpusManifest m = gen_corpus(cfg, dir.path());
  for (const auto& [name, fpt] : {std::pair<std::string, std::size_t>{"paired", 4}, {"dev_ood", 5}}) {
    const Dataset d = load_split(m, name);
    for (std::size_t i = 0; i < d.size(); ++i) {
      EXPECT_EQ(d.features[i].frames(), d.tokens[i].size() * fpt);
      EXPECT_EQ(d.features[i].dim(), cfg.feature_dim);
    }
  }
}

TEST(Corpus, RegenerationIsByteIdentical) {
  TempDir a("corpus"), b("corpus");
  gen_corpus(small_corpus(), a.path());
  gen_corpus(small_corpus(), b.path());
  std::size_t files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(a.path())) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), a.path());
    EXPECT_EQ(slurp(e.path()), slurp(b.path() / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 20u);
  CorpusConfig other = small_corpus();
  other.seed = 43;
  TempDir c("corpus");
  gen_corpus(other, c.path());
  EXPECT_NE(slurp(a / "manifest.json"), slurp(c / "manifest.json"));
}

TEST(Corpus, ManifestRoundTrip) {
  TempDir dir("corpus");
  const CorpusManifest m = gen_corpus(small_corpus(), dir.path());
  const CorpusManifest r = read_manifest(dir / "manifest.json");
  EXPECT_EQ(r.vocab, m.vocab);
  EXPECT_EQ(r.feature_dim, m.feature_dim);
  EXPECT_EQ(r.domains.at("in").pattern_table, m.domains.at("in").pattern_table);
  const Dataset a = load_split(m, "paired"), b = load_split(r, "paired");
  EXPECT_EQ(a.ids, b.ids);
  EXPECT_EQ(a.tokens, b.tokens);
  EXPECT_EQ(a.features, b.features);
}

TEST(Corpus, ManifestValidation) {
  TempDir dir("corpus");
  gen_corpus(small_corpus(), dir.path());
  const auto path = dir / "manifest.json";
  const std::string original(reinterpret_cast<const char*>(slurp(path).data()), slurp(path).size());

  auto rewrite = [&](const nlohmann::json& j) {
    std::ofstream(path, std::ios::trunc) << j.dump();
  };
  nlohmann::json j = nlohmann::json::parse(original);

  auto missing = j;
  std::filesystem::remove(dir.path() / missing["splits"]["dev"][0]["feature_path"].get<std::string>());
  rewrite(missing);
  EXPECT_THROW(read_manifest(path), IoError);

  gen_corpus(small_corpus(), dir.path());
  auto dup = j;
  dup["splits"]["dev"][1]["utt_id"] = dup["splits"]["dev"][0]["utt_id"];
  rewrite(dup);
  EXPECT_THROW(read_manifest(path), FormatError);

  std::ofstream(path, std::ios::trunc) << "{ not json";
  EXPECT_THROW(read_manifest(path), FormatError);
  EXPECT_THROW(read_manifest(dir / "absent.json"), IoError);
}

TEST(Corpus, UnwritableDirectoryIsIoError) {
  TempDir dir("corpus");
  std::ofstream(dir / "file") << "x";
  EXPECT_THROW(gen_corpus(small_corpus(), dir / "file" / "sub"), IoError);
}

TEST(Augment, ZeroWidthsAreIdentity) {
  const DomainSpec d = make_domain("in", 6, 4, 3, 0.2, 1);
  const FeatureSeq x = synth_features(TokenSeq{{2, 3, 4}}, d, 1);
  Rng rng(1);
  EXPECT_EQ(augment(x, 0, 0, rng), x);
}

TEST(Augment, OnlyBandsChangeAndFillIsTheMean) {
  const DomainSpec d = make_domain("in", 6, 4, 3, 0.2, 1);
  const FeatureSeq x = synth_features(TokenSeq{{2, 3, 4, 5}}, d, 1);
  double mean = 0.0;
  for (double v : x.values()) mean += v;
  mean /= static_cast<double>(x.values().size());
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    MaskBands b;
    const FeatureSeq y = augment(x, 3, 5, rng, MaskFill::kUtteranceMean, &b);
    ASSERT_EQ(y.frames(), x.frames());
    ASSERT_EQ(y.dim(), x.dim());
    EXPECT_LE(b.channel_width, 3u);
    EXPECT_LE(b.frame_width, 5u);
    EXPECT_LE(b.channel_begin + b.channel_width, x.dim());
    EXPECT_LE(b.frame_begin + b.frame_width, x.frames());
    for (std::size_t t = 0; t < x.frames(); ++t) {
      for (std::size_t c = 0; c < x.dim(); ++c) {
        const bool in_band = (c >= b.channel_begin && c < b.channel_begin + b.channel_width) ||
                             (t >= b.frame_begin && t < b.frame_begin + b.frame_width);
        EXPECT_EQ(y.at(t, c), in_band ? mean : x.at(t, c));
      }
    }
  }
}

TEST(Augment, FullWidthChannelBandCount) {
  const FeatureSeq x(6, 3, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12,
                                               13, 14, 15, 16, 17, 18});
  Rng rng(0);
  int seen = 0;
  for (int trial = 0; trial < 400 && seen == 0; ++trial) {
    MaskBands b;
    const FeatureSeq y = augment(x, 3, 0, rng, MaskFill::kZero, &b);
    if (b.channel_width != 3) continue;
    ++seen;
    std::size_t zeros = 0;
    for (double v : y.values()) zeros += v == 0.0;
    EXPECT_EQ(zeros, 3u * 6u);
  }
  EXPECT_EQ(seen, 1);
}

TEST(Augment, DeterministicUnderSeedAndInputUntouched) {
  const DomainSpec d = make_domain("in", 6, 4, 3, 0.2, 1);
  const FeatureSeq x = synth_features(TokenSeq{{2, 3, 4}}, d, 1);
  const FeatureSeq copy = x;
  Rng r1(77), r2(77);
  EXPECT_EQ(augment(x, 2, 4, r1), augment(x, 2, 4, r2));
  EXPECT_EQ(x, copy);
}

}  // namespace
}  // namespace cyc
