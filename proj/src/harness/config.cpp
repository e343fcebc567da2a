// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/harness/config.hpp"

#include <set>

#include "cyc/data/feature_file.hpp"
#include "cyc/errors.hpp"

namespace cyc {

using nlohmann::json;

namespace {

// Reads the members of one JSON object, remembering which were consumed so
// leftovers can be reported as unknown keys.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + child(key) + "' has the wrong type");
    }
  }

  template <typename Parse>
  void get_enum(const char* key, Parse parse) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_string()) throw ConfigError("config key '" + child(key) + "' must be a string");
    try {
      parse(it->template get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError("config key '" + child(key) + "': " + e.what());
    }
  }

  const json* section(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + child(it.key().c_str()) + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : "config section '" + path_ + "'"; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F>
void with_section(Fields& parent, const char* key, F body) {
  if (const json* j = parent.section(key)) {
    Fields f(*j, parent.child(key));
    body(f);
    f.finish();
  }
}

ReleaseDirection parse_direction(const std::string& s) {
  if (s == "below") return ReleaseDirection::kBelowThreshold;
  if (s == "above") return ReleaseDirection::kAboveThreshold;
  throw ConfigError("expected \"below\" or \"above\", got \"" + s + "\"");
}

MaskFill parse_fill(const std::string& s) {
  if (s == "mean") return MaskFill::kUtteranceMean;
  if (s == "zero") return MaskFill::kZero;
  throw ConfigError("expected \"mean\" or \"zero\", got \"" + s + "\"");
}

Baseline parse_baseline(const std::string& s) {
  if (s == "mean") return Baseline::kMean;
  if (s == "none") return Baseline::kNone;
  throw ConfigError("expected \"mean\" or \"none\", got \"" + s + "\"");
}

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adadelta") return OptimizerKind::kAdadelta;
  if (s == "sgd") return OptimizerKind::kSgd;
  throw ConfigError("expected \"adadelta\" or \"sgd\", got \"" + s + "\"");
}

void read_domain(Fields& f, DomainParams& d) {
  f.get("frames_per_token", d.frames_per_token);
  f.get("noise_sigma", d.noise_sigma);
}

}  // namespace

TrainMode parse_train_mode(std::string_view s) {
  if (s == "baseline") return TrainMode::kBaseline;
  if (s == "so") return TrainMode::kSo;
  if (s == "to") return TrainMode::kTo;
  if (s == "st") return TrainMode::kSt;
  throw ConfigError("unknown mode '" + std::string(s) + "' (baseline, so, to, st)");
}

std::string_view to_string(TrainMode m) {
  switch (m) {
    case TrainMode::kBaseline: return "baseline";
    case TrainMode::kSo: return "so";
    case TrainMode::kTo: return "to";
    case TrainMode::kSt: return "st";
  }
  return "?";
}

void AppConfig::finalize() {
  corpus.seed = derive_seed(seed, "corpus");
  asr.vocab = tts.vocab = lm.vocab = corpus.vocab;
  asr.feat_dim = tts.feat_dim = corpus.feature_dim;
  asr.seed = derive_seed(seed, "init.asr");
  tts.seed = derive_seed(seed, "init.tts");
  lm.seed = derive_seed(seed, "init.lm");
}

void AppConfig::validate() const {
  corpus.validate();
  try {
    cycle.validate();
  } catch (const ContractError& e) {
    throw ConfigError(std::string("cycle: ") + e.what());
  }
  if (optimizer.kind == OptimizerKind::kAdadelta && !(optimizer.rho > 0.0 && optimizer.rho < 1.0)) {
    throw ConfigError("optimizer.rho must lie in (0, 1)");
  }
  if (!(optimizer.eps > 0.0)) throw ConfigError("optimizer.eps must be positive");
  if (!(optimizer.lr > 0.0)) throw ConfigError("optimizer.lr must be positive");
  if (pretrain.batch_size < 1 || train.batch_size < 1 || train.unsup_batch_size < 1) {
    throw ConfigError("batch sizes must be at least 1");
  }
  if (train.total_steps < 1) throw ConfigError("train.total_steps must be at least 1");
  if (train.eval_interval < 1 || train.log_interval < 1 || pretrain.log_interval < 1 ||
      pretrain.eval_interval < 1) {
    throw ConfigError("log and eval intervals must be at least 1");
  }
  if (train.eval_max_len < 1) throw ConfigError("train.eval_max_len must be at least 1");
}

AppConfig parse_config(const json& j) {
  AppConfig c;
  Fields top(j, "");
  top.get("seed", c.seed);
  with_section(top, "paths", [&](Fields& f) { f.get("manifest", c.manifest); });
  with_section(top, "corpus", [&](Fields& f) {
    f.get("vocab", c.corpus.vocab);
    f.get("feature_dim", c.corpus.feature_dim);
    f.get("min_len", c.corpus.min_len);
    f.get("max_len", c.corpus.max_len);
    f.get("speech_only_domain", c.corpus.speech_only_domain);
    with_section(f, "in_domain", [&](Fields& d) { read_domain(d, c.corpus.in_domain); });
    with_section(f, "out_domain", [&](Fields& d) { read_domain(d, c.corpus.out_domain); });
    with_section(f, "sizes", [&](Fields& s) {
      s.get("paired", c.corpus.paired);
      s.get("speech_only", c.corpus.speech_only);
      s.get("text_only", c.corpus.text_only);
      s.get("dev", c.corpus.dev);
      s.get("paired_ood", c.corpus.paired_ood);
      s.get("dev_ood", c.corpus.dev_ood);
    });
  });
  with_section(top, "models", [&](Fields& f) {
    with_section(f, "asr", [&](Fields& m) {
      m.get("enc_hidden", c.asr.enc_hidden);
      m.get("dec_hidden", c.asr.dec_hidden);
      m.get("embed", c.asr.embed);
      m.get("att_dim", c.asr.att_dim);
      m.get("init_scale", c.asr.init_scale);
    });
    with_section(f, "tts", [&](Fields& m) {
      m.get("embed", c.tts.embed);
      m.get("hidden", c.tts.hidden);
      m.get("att_dim", c.tts.att_dim);
      m.get("init_scale", c.tts.init_scale);
      m.get("residual", c.tts.residual);
    });
    with_section(f, "lm", [&](Fields& m) {
      m.get("embed", c.lm.embed);
      m.get("hidden", c.lm.hidden);
      m.get("init_scale", c.lm.init_scale);
    });
  });
  with_section(top, "optimizer", [&](Fields& f) {
    f.get_enum("kind", [&](const std::string& s) { c.optimizer.kind = parse_optimizer(s); });
    f.get("rho", c.optimizer.rho);
    f.get("eps", c.optimizer.eps);
    f.get("lr", c.optimizer.lr);
    f.get("clip_norm", c.optimizer.clip_norm);
  });
  with_section(top, "pretrain", [&](Fields& f) {
    f.get("asr_steps", c.pretrain.asr_steps);
    f.get("tts_steps", c.pretrain.tts_steps);
    f.get("lm_steps", c.pretrain.lm_steps);
    f.get("batch_size", c.pretrain.batch_size);
    f.get("asr_split", c.pretrain.asr_split);
    f.get("tts_split", c.pretrain.tts_split);
    f.get("log_interval", c.pretrain.log_interval);
    f.get("eval_interval", c.pretrain.eval_interval);
  });
  with_section(top, "train", [&](Fields& f) {
    f.get_enum("mode", [&](const std::string& s) { c.train.mode = parse_train_mode(s); });
    f.get("total_steps", c.train.total_steps);
    f.get("batch_size", c.train.batch_size);
    f.get("unsup_batch_size", c.train.unsup_batch_size);
    f.get("eval_interval", c.train.eval_interval);
    f.get("log_interval", c.train.log_interval);
    f.get("interleave", c.train.interleave);
    f.get("sup_split", c.train.sup_split);
    f.get("so_split", c.train.so_split);
    f.get("to_split", c.train.to_split);
    f.get("dev_split", c.train.dev_split);
    f.get("eval_max_len", c.train.eval_max_len);
  });
  with_section(top, "cycle", [&](Fields& f) {
    f.get("alpha", c.cycle.alpha);
    f.get("beta", c.cycle.beta);
    f.get("n_samples", c.cycle.n_samples);
    f.get("max_hyp_len", c.cycle.max_hyp_len);
    f.get("max_frames", c.cycle.max_frames);
    f.get_enum("baseline", [&](const std::string& s) { c.cycle.baseline = parse_baseline(s); });
    f.get("train_tts", c.cycle.train_tts);
  });
  with_section(top, "schedule", [&](Fields& f) {
    f.get("enabled", c.schedule.enabled);
    f.get_enum("kind", [&](const std::string& s) { c.schedule.kind = parse_schedule_kind(s); });
    f.get("gamma_literal", c.schedule.gamma_literal);
    f.get_enum("release_direction",
               [&](const std::string& s) { c.schedule.direction = parse_direction(s); });
  });
  with_section(top, "augment", [&](Fields& f) {
    f.get("enabled", c.augment.enabled);
    f.get("f_width", c.augment.f_width);
    f.get("t_width", c.augment.t_width);
    f.get_enum("fill", [&](const std::string& s) { c.augment.fill = parse_fill(s); });
  });
  top.finish();
  c.finalize();
  c.validate();
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("config file '" + path.string() + "' does not exist");
  }
  const std::vector<std::uint8_t> bytes = read_file(path);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const AppConfig& c) {
  auto dir = [](ReleaseDirection d) { return d == ReleaseDirection::kBelowThreshold ? "below" : "above"; };
  return {
      {"seed", c.seed},
      {"paths", {{"manifest", c.manifest}}},
      {"corpus",
       {{"vocab", c.corpus.vocab},
        {"feature_dim", c.corpus.feature_dim},
        {"min_len", c.corpus.min_len},
        {"max_len", c.corpus.max_len},
        {"speech_only_domain", c.corpus.speech_only_domain},
        {"in_domain",
         {{"frames_per_token", c.corpus.in_domain.frames_per_token},
          {"noise_sigma", c.corpus.in_domain.noise_sigma}}},
        {"out_domain",
         {{"frames_per_token", c.corpus.out_domain.frames_per_token},
          {"noise_sigma", c.corpus.out_domain.noise_sigma}}},
        {"sizes",
         {{"paired", c.corpus.paired},
          {"speech_only", c.corpus.speech_only},
          {"text_only", c.corpus.text_only},
          {"dev", c.corpus.dev},
          {"paired_ood", c.corpus.paired_ood},
          {"dev_ood", c.corpus.dev_ood}}}}},
      {"models",
       {{"asr",
         {{"enc_hidden", c.asr.enc_hidden},
          {"dec_hidden", c.asr.dec_hidden},
          {"embed", c.asr.embed},
          {"att_dim", c.asr.att_dim},
          {"init_scale", c.asr.init_scale}}},
        {"tts",
         {{"embed", c.tts.embed},
          {"hidden", c.tts.hidden},
          {"att_dim", c.tts.att_dim},
          {"init_scale", c.tts.init_scale},
          {"residual", c.tts.residual}}},
        {"lm", {{"embed", c.lm.embed}, {"hidden", c.lm.hidden}, {"init_scale", c.lm.init_scale}}}}},
      {"optimizer",
       {{"kind", c.optimizer.kind == OptimizerKind::kAdadelta ? "adadelta" : "sgd"},
        {"rho", c.optimizer.rho},
        {"eps", c.optimizer.eps},
        {"lr", c.optimizer.lr},
        {"clip_norm", c.optimizer.clip_norm}}},
      {"pretrain",
       {{"asr_steps", c.pretrain.asr_steps},
        {"tts_steps", c.pretrain.tts_steps},
        {"lm_steps", c.pretrain.lm_steps},
        {"batch_size", c.pretrain.batch_size},
        {"asr_split", c.pretrain.asr_split},
        {"tts_split", c.pretrain.tts_split},
        {"log_interval", c.pretrain.log_interval},
        {"eval_interval", c.pretrain.eval_interval}}},
      {"train",
       {{"mode", std::string(to_string(c.train.mode))},
        {"total_steps", c.train.total_steps},
        {"batch_size", c.train.batch_size},
        {"unsup_batch_size", c.train.unsup_batch_size},
        {"eval_interval", c.train.eval_interval},
        {"log_interval", c.train.log_interval},
        {"interleave", c.train.interleave},
        {"sup_split", c.train.sup_split},
        {"so_split", c.train.so_split},
        {"to_split", c.train.to_split},
        {"dev_split", c.train.dev_split},
        {"eval_max_len", c.train.eval_max_len}}},
      {"cycle",
       {{"alpha", c.cycle.alpha},
        {"beta", c.cycle.beta},
        {"n_samples", c.cycle.n_samples},
        {"max_hyp_len", c.cycle.max_hyp_len},
        {"max_frames", c.cycle.max_frames},
        {"baseline", c.cycle.baseline == Baseline::kMean ? "mean" : "none"},
        {"train_tts", c.cycle.train_tts}}},
      {"schedule",
       {{"enabled", c.schedule.enabled},
        {"kind", std::string(to_string(c.schedule.kind))},
        {"gamma_literal", c.schedule.gamma_literal},
        {"release_direction", dir(c.schedule.direction)}}},
      {"augment",
       {{"enabled", c.augment.enabled},
        {"f_width", c.augment.f_width},
        {"t_width", c.augment.t_width},
        {"fill", c.augment.fill == MaskFill::kUtteranceMean ? "mean" : "zero"}}},
  };
}

std::uint64_t config_hash(const AppConfig& cfg) { return fnv1a(to_json(cfg).dump()); }

}  // namespace cyc
