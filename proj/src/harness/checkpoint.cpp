// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/harness/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "cyc/data/feature_file.hpp"
#include "cyc/errors.hpp"

namespace cyc {

namespace {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { uint_le(v, 2); }
  void u32(std::uint32_t v) { uint_le(v, 4); }
  void f64(double v) { uint_le(std::bit_cast<std::uint64_t>(v), 8); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void uint_le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(uint_le(1, "u8")); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(uint_le(2, "u16")); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(uint_le(4, "u32")); }
  double f64() { return std::bit_cast<double>(uint_le(8, "f64")); }
  std::string str(std::size_t n) {
    need(n, "name");
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (b_.size() - pos_ < n) {
      throw FormatError(std::string("truncated checkpoint while reading ") + what, pos_);
    }
  }
  std::uint64_t uint_le(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

constexpr char kMagic[4] = {'E', 'A', 'T', 'C'};

void store_params(Checkpoint& c, const std::string& prefix, const ParamSet& ps) {
  for (const auto& [name, v] : ps.named()) c.put(prefix + name, v.value());
}

void restore_params(const Checkpoint& c, const std::string& prefix, ParamSet& ps) {
  for (auto& [name, v] : ps.named()) {
    const ad::Tensor& t = c.at(prefix + name);
    if (t.shape() != v.shape()) {
      throw FormatError("checkpoint entry '" + prefix + name + "' has shape " +
                            ad::to_string(t.shape()) + ", model expects " + ad::to_string(v.shape()),
                        0);
    }
    v.mutable_value() = t;
  }
}

std::size_t size_of(const Checkpoint& c, const std::string& name) {
  const double v = c.scalar(name);
  if (!(v >= 1.0) || v != std::floor(v)) throw FormatError("bad size in '" + name + "'", 0);
  return static_cast<std::size_t>(v);
}

}  // namespace

void Checkpoint::put(const std::string& name, ad::Tensor value) {
  for (auto& [n, t] : entries_) {
    if (n == name) {
      t = std::move(value);
      return;
    }
  }
  entries_.emplace_back(name, std::move(value));
}

const ad::Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return &t;
  }
  return nullptr;
}

const ad::Tensor& Checkpoint::at(const std::string& name) const {
  const ad::Tensor* t = find(name);
  if (!t) throw FormatError("checkpoint has no entry '" + name + "'", 0);
  return *t;
}

double Checkpoint::scalar(const std::string& name) const { return at(name).item(); }

bool Checkpoint::has_prefix(const std::string& prefix) const {
  for (const auto& [n, t] : entries_) {
    if (n.compare(0, prefix.size(), prefix) == 0) return true;
  }
  return false;
}

std::uint64_t Checkpoint::step() const {
  const ad::Tensor* t = find("meta/step");
  return t ? static_cast<std::uint64_t>(t->item()) : 0;
}

void Checkpoint::set_step(std::uint64_t step) { put_scalar("meta/step", static_cast<double>(step)); }

std::uint64_t Checkpoint::config_hash() const {
  const ad::Tensor* lo = find("meta/config_hash_lo");
  const ad::Tensor* hi = find("meta/config_hash_hi");
  if (!lo || !hi) return 0;
  return static_cast<std::uint64_t>(lo->item()) | (static_cast<std::uint64_t>(hi->item()) << 32);
}

void Checkpoint::set_config_hash(std::uint64_t h) {
  put_scalar("meta/config_hash_lo", static_cast<double>(h & 0xffffffffULL));
  put_scalar("meta/config_hash_hi", static_cast<double>(h >> 32));
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u16(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(c.entries().size()));
  for (const auto& [name, t] : c.entries()) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw ContractError("checkpoint entry name too long");
    }
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : t.data()) w.f64(v);
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("bad EATC magic", 0);
  }
  Reader r(bytes);
  r.str(4);
  const std::size_t version_at = r.pos();
  if (const std::uint16_t v = r.u16(); v != kCheckpointVersion) {
    throw FormatError("unsupported EATC version " + std::to_string(v), version_at);
  }
  const std::uint32_t count = r.u32();
  Checkpoint c;
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::uint16_t len = r.u16();
    std::string name = r.str(len);
    const std::uint8_t rank = r.u8();
    ad::Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      const std::size_t at = r.pos();
      d = r.u32();
      if (d == 0) throw FormatError("zero extent in '" + name + "'", at);
      n *= d;
    }
    if ((bytes.size() - r.pos()) / 8 < n) {
      throw FormatError("truncated payload for '" + name + "'", r.pos());
    }
    std::vector<double> data(n);
    for (double& v : data) {
      const std::size_t at = r.pos();
      v = r.f64();
      if (!std::isfinite(v)) throw FormatError("non-finite value in '" + name + "'", at);
    }
    if (c.find(name)) throw FormatError("duplicate checkpoint entry '" + name + "'", r.pos());
    c.put(name, ad::Tensor(std::move(shape), std::move(data)));
  }
  if (!r.done()) throw FormatError("trailing bytes after checkpoint entries", r.pos());
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  write_file(path, encode_checkpoint(c));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

void store(Checkpoint& c, const AsrModel& m) {
  const AsrConfig& k = m.config();
  c.put_scalar("meta/asr/vocab", k.vocab);
  c.put_scalar("meta/asr/feat_dim", static_cast<double>(k.feat_dim));
  c.put_scalar("meta/asr/enc_hidden", static_cast<double>(k.enc_hidden));
  c.put_scalar("meta/asr/dec_hidden", static_cast<double>(k.dec_hidden));
  c.put_scalar("meta/asr/embed", static_cast<double>(k.embed));
  c.put_scalar("meta/asr/att_dim", static_cast<double>(k.att_dim));
  store_params(c, "asr/", m.params());
}

void store(Checkpoint& c, const TtsModel& m) {
  const TtsConfig& k = m.config();
  c.put_scalar("meta/tts/vocab", k.vocab);
  c.put_scalar("meta/tts/feat_dim", static_cast<double>(k.feat_dim));
  c.put_scalar("meta/tts/embed", static_cast<double>(k.embed));
  c.put_scalar("meta/tts/hidden", static_cast<double>(k.hidden));
  c.put_scalar("meta/tts/att_dim", static_cast<double>(k.att_dim));
  c.put_scalar("meta/tts/residual", k.residual ? 1.0 : 0.0);
  store_params(c, "tts/", m.params());
}

void store(Checkpoint& c, const LmModel& m) {
  const LmConfig& k = m.config();
  c.put_scalar("meta/lm/vocab", k.vocab);
  c.put_scalar("meta/lm/embed", static_cast<double>(k.embed));
  c.put_scalar("meta/lm/hidden", static_cast<double>(k.hidden));
  store_params(c, "lm/", m.params());
}

std::unique_ptr<AsrModel> restore_asr(const Checkpoint& c) {
  if (!c.find("meta/asr/vocab")) return nullptr;
  AsrConfig k;
  k.vocab = static_cast<int>(size_of(c, "meta/asr/vocab"));
  k.feat_dim = size_of(c, "meta/asr/feat_dim");
  k.enc_hidden = size_of(c, "meta/asr/enc_hidden");
  k.dec_hidden = size_of(c, "meta/asr/dec_hidden");
  k.embed = size_of(c, "meta/asr/embed");
  k.att_dim = size_of(c, "meta/asr/att_dim");
  auto m = std::make_unique<AsrModel>(k);
  restore_params(c, "asr/", m->params());
  return m;
}

std::unique_ptr<TtsModel> restore_tts(const Checkpoint& c) {
  if (!c.find("meta/tts/vocab")) return nullptr;
  TtsConfig k;
  k.vocab = static_cast<int>(size_of(c, "meta/tts/vocab"));
  k.feat_dim = size_of(c, "meta/tts/feat_dim");
  k.embed = size_of(c, "meta/tts/embed");
  k.hidden = size_of(c, "meta/tts/hidden");
  k.att_dim = size_of(c, "meta/tts/att_dim");
  k.residual = c.scalar("meta/tts/residual") != 0.0;
  auto m = std::make_unique<TtsModel>(k);
  restore_params(c, "tts/", m->params());
  return m;
}

std::unique_ptr<LmModel> restore_lm(const Checkpoint& c) {
  if (!c.find("meta/lm/vocab")) return nullptr;
  LmConfig k;
  k.vocab = static_cast<int>(size_of(c, "meta/lm/vocab"));
  k.embed = size_of(c, "meta/lm/embed");
  k.hidden = size_of(c, "meta/lm/hidden");
  auto m = std::make_unique<LmModel>(k);
  restore_params(c, "lm/", m->params());
  return m;
}

void store_optimizer(Checkpoint& c, const std::string& group, const ParamSet& ps,
                     ad::Adadelta& opt) {
  const auto& named = ps.named();
  if (named.size() != opt.sq_grad().size()) throw ContractError("optimizer does not match parameters");
  for (std::size_t i = 0; i < named.size(); ++i) {
    const std::string base = "opt/" + group + "/" + named[i].first;
    c.put(base + "/sq_grad", opt.sq_grad()[i]);
    c.put(base + "/sq_delta", opt.sq_delta()[i]);
  }
}

bool restore_optimizer(const Checkpoint& c, const std::string& group, const ParamSet& ps,
                       ad::Adadelta& opt) {
  if (!c.has_prefix("opt/" + group + "/")) return false;
  const auto& named = ps.named();
  for (std::size_t i = 0; i < named.size(); ++i) {
    const std::string base = "opt/" + group + "/" + named[i].first;
    opt.sq_grad()[i] = c.at(base + "/sq_grad");
    opt.sq_delta()[i] = c.at(base + "/sq_delta");
  }
  return true;
}

}  // namespace cyc
