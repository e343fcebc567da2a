// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/harness/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include "cyc/anneal/schedule.hpp"
#include "cyc/autodiff/optim.hpp"
#include "cyc/cycle/losses.hpp"
#include "cyc/data/augment.hpp"
#include "cyc/harness/evaluate.hpp"
#include "cyc/log.hpp"

namespace cyc {

namespace {

// Parameters of one model plus the optimizer that updates them.
class Trainable {
 public:
  Trainable(std::string group, ParamSet& params, const OptimizerConfig& oc)
      : group_(std::move(group)), params_(&params), vars_(params.vars()), clip_(oc.clip_norm) {
    if (oc.kind == OptimizerKind::kAdadelta) {
      auto a = std::make_unique<ad::Adadelta>(vars_, oc.rho, oc.eps, oc.lr);
      adadelta_ = a.get();
      opt_ = std::move(a);
    } else {
      opt_ = std::make_unique<ad::Sgd>(vars_, oc.lr);
    }
  }

  void zero_grad() { ad::zero_grad(vars_); }

  // Clips and applies the accumulated gradient. Throws NumericError when the
  // gradient is not finite, before anything is changed.
  void step() {
    const double limit = clip_ > 0.0 ? clip_ : std::numeric_limits<double>::infinity();
    const double norm = ad::clip_grad_norm(vars_, limit);
    if (!std::isfinite(norm)) throw NumericError(group_ + " gradient norm is not finite");
    opt_->step();
  }

  void save(Checkpoint& c) const {
    if (adadelta_) store_optimizer(c, group_, *params_, *adadelta_);
  }

 private:
  std::string group_;
  ParamSet* params_;
  std::vector<ad::Var> vars_;
  double clip_;
  std::unique_ptr<ad::Optimizer> opt_;
  ad::Adadelta* adadelta_ = nullptr;
};

template <class T>
std::vector<const T*> gather(const std::vector<T>& v, std::span<const std::size_t> idx) {
  std::vector<const T*> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(&v[i]);
  return out;
}

std::vector<const FeatureSeq*> as_pointers(const std::vector<FeatureSeq>& v) {
  std::vector<const FeatureSeq*> out;
  out.reserve(v.size());
  for (const FeatureSeq& x : v) out.push_back(&x);
  return out;
}

Dataset require_split(const CorpusManifest& m, const std::string& name, bool tokens,
                      bool features) {
  Dataset d = load_split(m, name);
  if (d.size() == 0) throw ConfigError("split '" + name + "' is empty");
  if (tokens && !d.has_tokens()) throw ConfigError("split '" + name + "' has no transcripts");
  if (features && !d.has_features()) throw ConfigError("split '" + name + "' has no features");
  return d;
}

void check_dims(const CorpusManifest& m, const AppConfig& cfg) {
  if (m.vocab != cfg.corpus.vocab || m.feature_dim != cfg.corpus.feature_dim) {
    throw ConfigError("manifest has vocab " + std::to_string(m.vocab) + " and feature_dim " +
                      std::to_string(m.feature_dim) + ", config expects " +
                      std::to_string(cfg.corpus.vocab) + " and " +
                      std::to_string(cfg.corpus.feature_dim));
  }
}

// Running means of the quantities reported on "train" rows.
struct Window {
  double loss = 0.0, reward = 0.0, released = 0.0;
  std::size_t steps = 0, reward_steps = 0;

  void add(double l, std::optional<double> r, double rel) {
    loss += l;
    released += rel;
    ++steps;
    if (r) {
      reward += *r;
      ++reward_steps;
    }
  }

  MetricsRow flush(std::size_t step, bool with_released) {
    MetricsRow row;
    row.step = step;
    row.phase = "train";
    row.loss = loss / static_cast<double>(steps);
    if (reward_steps > 0) row.reward_mean = reward / static_cast<double>(reward_steps);
    if (with_released) row.released_frac = released / static_cast<double>(steps);
    *this = Window{};
    return row;
  }
};

bool due(std::size_t done, std::size_t interval, std::size_t total) {
  return done % interval == 0 || done == total;
}

void finish_checkpoint(Checkpoint& c, const AppConfig& cfg, std::size_t step) {
  c.set_step(step);
  c.set_config_hash(config_hash(cfg));
}

}  // namespace

PretrainTarget parse_pretrain_target(std::string_view s) {
  if (s == "asr") return PretrainTarget::kAsr;
  if (s == "tts") return PretrainTarget::kTts;
  if (s == "lm") return PretrainTarget::kLm;
  throw ConfigError("unknown model '" + std::string(s) + "' (expected asr, tts or lm)");
}

std::string_view to_string(PretrainTarget t) {
  switch (t) {
    case PretrainTarget::kAsr: return "asr";
    case PretrainTarget::kTts: return "tts";
    case PretrainTarget::kLm: return "lm";
  }
  return "?";
}

BatchSampler::BatchSampler(std::size_t n, std::size_t batch, std::uint64_t seed)
    : order_(n), batch_(batch), pos_(n), rng_(seed) {
  if (n == 0 || batch == 0) throw ContractError("BatchSampler needs n >= 1 and batch >= 1");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
}

std::vector<std::size_t> BatchSampler::next() {
  std::vector<std::size_t> out;
  out.reserve(batch_);
  while (out.size() < batch_) {
    if (pos_ == order_.size()) {
      std::shuffle(order_.begin(), order_.end(), rng_);
      pos_ = 0;
    }
    out.push_back(order_[pos_++]);
  }
  return out;
}

RunResult pretrain(PretrainTarget which, const AppConfig& cfg, const CorpusManifest& manifest) {
  check_dims(manifest, cfg);
  const PretrainConfig& pc = cfg.pretrain;

  std::unique_ptr<AsrModel> asr;
  std::unique_ptr<TtsModel> tts;
  std::unique_ptr<LmModel> lm;
  Dataset train, dev;
  std::size_t steps = 0;
  ParamSet* params = nullptr;

  switch (which) {
    case PretrainTarget::kAsr:
      asr = std::make_unique<AsrModel>(cfg.asr);
      params = &asr->params();
      train = require_split(manifest, pc.asr_split, true, true);
      dev = require_split(manifest, cfg.train.dev_split, true, true);
      steps = pc.asr_steps;
      break;
    case PretrainTarget::kTts:
      tts = std::make_unique<TtsModel>(cfg.tts);
      params = &tts->params();
      train = require_split(manifest, pc.tts_split, true, true);
      dev = require_split(manifest, cfg.train.dev_split, true, true);
      steps = pc.tts_steps;
      break;
    case PretrainTarget::kLm: {
      lm = std::make_unique<LmModel>(cfg.lm);
      params = &lm->params();
      train = require_split(manifest, "text_only", true, false);
      const Dataset paired = require_split(manifest, "paired", true, false);
      train.tokens.insert(train.tokens.end(), paired.tokens.begin(), paired.tokens.end());
      train.ids.insert(train.ids.end(), paired.ids.begin(), paired.ids.end());
      dev = require_split(manifest, cfg.train.dev_split, true, false);
      steps = pc.lm_steps;
      break;
    }
  }

  Trainable trainable(std::string(to_string(which)), *params, cfg.optimizer);
  BatchSampler sampler(train.size(), pc.batch_size,
                       derive_seed(cfg.seed, "pretrain." + std::string(to_string(which))));

  auto snapshot = [&](std::size_t step) {
    Checkpoint c;
    if (asr) store(c, *asr);
    if (tts) store(c, *tts);
    if (lm) store(c, *lm);
    trainable.save(c);
    finish_checkpoint(c, cfg, step);
    return c;
  };

  std::vector<MetricsRow> rows;
  Window window;
  for (std::size_t t = 0; t < steps; ++t) {
    const auto idx = sampler.next();
    const auto ys = gather(train.tokens, idx);
    double loss = 0.0;
    try {
      trainable.zero_grad();
      switch (which) {
        case PretrainTarget::kAsr: loss = asr_supervised_loss(*asr, gather(train.features, idx), ys); break;
        case PretrainTarget::kTts: loss = tts_supervised_loss(*tts, ys, gather(train.features, idx)); break;
        case PretrainTarget::kLm: loss = lm_supervised_loss(*lm, ys); break;
      }
      if (!std::isfinite(loss)) throw NumericError("loss is not finite");
      trainable.step();
    } catch (const NumericError& e) {
      throw DivergenceError("pretrain " + std::string(to_string(which)) + " diverged at step " +
                                std::to_string(t) + ": " + e.what(),
                            snapshot(t), rows);
    }
    window.add(loss, std::nullopt, 0.0);
    const std::size_t done = t + 1;
    if (due(done, pc.log_interval, steps)) {
      rows.push_back(window.flush(done, false));
      log_info("pretrain " + std::string(to_string(which)) + " step " + std::to_string(done) +
               " loss " + std::to_string(rows.back().loss));
    }
    if (due(done, pc.eval_interval, steps)) {
      MetricsRow row;
      row.step = done;
      row.phase = "eval";
      switch (which) {
        case PretrainTarget::kAsr: {
          const EvalResult r = evaluate(*asr, dev, cfg.train.eval_max_len);
          row.dev_ter = r.ter;
          row.dev_nll = r.nll;
          break;
        }
        case PretrainTarget::kTts: row.dev_nll = tts_dev_loss(*tts, dev); break;
        case PretrainTarget::kLm: row.dev_nll = lm_dev_nll(*lm, dev); break;
      }
      rows.push_back(row);
    }
  }
  return {snapshot(steps), std::move(rows)};
}

RunResult train_cycle(const AppConfig& cfg, const CorpusManifest& manifest, CycleInputs models) {
  check_dims(manifest, cfg);
  const TrainConfig& tc = cfg.train;
  const TrainMode mode = tc.mode;
  const bool use_so = mode == TrainMode::kSo || mode == TrainMode::kSt;
  const bool use_to = mode == TrainMode::kTo || mode == TrainMode::kSt;

  if (!models.asr) throw ConfigError("cycle training needs an ASR model");
  if ((use_so || use_to) && !models.tts) {
    throw ConfigError("mode " + std::string(to_string(mode)) + " needs a TTS model");
  }
  if (use_so && !models.lm) {
    throw ConfigError("mode " + std::string(to_string(mode)) + " needs a language model");
  }
  if (!use_so && !use_to) {
    models.tts.reset();
    models.lm.reset();
  } else if (!use_so) {
    models.lm.reset();
  }
  AsrModel& asr = *models.asr;

  const Dataset sup = require_split(manifest, tc.sup_split, true, true);
  const Dataset dev = require_split(manifest, tc.dev_split, true, true);
  Dataset so_data, to_data;
  if (use_so) so_data = require_split(manifest, tc.so_split, false, true);
  if (use_to) to_data = require_split(manifest, tc.to_split, true, false);

  const bool train_tts = use_so && cfg.cycle.train_tts;
  Trainable asr_opt("asr", asr.params(), cfg.optimizer);
  std::optional<Trainable> tts_opt;
  if (train_tts) tts_opt.emplace("tts", models.tts->params(), cfg.optimizer);

  Schedule schedule;
  schedule.kind = cfg.schedule.kind;
  schedule.total_steps = tc.total_steps;
  schedule.class_count = cfg.corpus.vocab;
  schedule.gamma_literal = cfg.schedule.gamma_literal;
  schedule.direction = cfg.schedule.direction;
  schedule.validate();

  BatchSampler sup_batches(sup.size(), tc.batch_size, derive_seed(cfg.seed, "train.batches.sup"));
  std::optional<BatchSampler> so_batches, to_batches;
  if (use_so) so_batches.emplace(so_data.size(), tc.unsup_batch_size, derive_seed(cfg.seed, "train.batches.so"));
  if (use_to) to_batches.emplace(to_data.size(), tc.unsup_batch_size, derive_seed(cfg.seed, "train.batches.to"));
  Rng sampling(derive_seed(cfg.seed, "train.sampling"));
  Rng masking(derive_seed(cfg.seed, "train.augment"));

  const CycleModels cm{&asr, models.tts.get(), models.lm.get()};
  const AugmentConfig& ac = cfg.augment;
  auto maybe_augment = [&](std::vector<const FeatureSeq*> xs, std::vector<FeatureSeq>& store) {
    if (!ac.enabled) return xs;
    store.clear();
    store.reserve(xs.size());
    for (const FeatureSeq* x : xs) store.push_back(augment(*x, ac.f_width, ac.t_width, masking, ac.fill));
    return as_pointers(store);
  };

  auto snapshot = [&](std::size_t step) {
    Checkpoint c;
    store(c, asr);
    if (models.tts) store(c, *models.tts);
    if (models.lm) store(c, *models.lm);
    asr_opt.save(c);
    if (tts_opt) tts_opt->save(c);
    finish_checkpoint(c, cfg, step);
    return c;
  };
  auto zero_all = [&] {
    asr_opt.zero_grad();
    if (tts_opt) tts_opt->zero_grad();
  };
  auto step_all = [&] {
    asr_opt.step();
    if (tts_opt) tts_opt->step();
  };

  std::vector<MetricsRow> rows;
  Window window;
  std::vector<FeatureSeq> so_aug, sup_aug;
  for (std::size_t t = 0; t < tc.total_steps; ++t) {
    double loss = 0.0;
    std::optional<double> reward;
    double released_frac = 1.0;
    try {
      zero_all();
      if (use_so || use_to) {
        std::vector<const FeatureSeq*> xs;
        std::vector<const TokenSeq*> ys;
        if (use_so) xs = maybe_augment(gather(so_data.features, so_batches->next()), so_aug);
        if (use_to) ys = gather(to_data.tokens, to_batches->next());
        LossReport rep;
        if (mode == TrainMode::kSo) rep = so_loss(cm, xs, cfg.cycle, sampling);
        else if (mode == TrainMode::kTo) rep = to_loss(cm, ys, cfg.cycle);
        else rep = st_loss(cm, xs, ys, cfg.cycle, sampling);
        if (!std::isfinite(rep.value)) throw NumericError("unpaired loss is not finite");
        loss += rep.value;
        if (use_so) reward = rep.reward_mean;
        if (tc.interleave) {
          step_all();
          zero_all();
        }
      }

      const auto idx = sup_batches.next();
      const auto xs_clean = gather(sup.features, idx);
      const auto ys = gather(sup.tokens, idx);
      std::vector<std::size_t> keep(idx.size());
      std::iota(keep.begin(), keep.end(), std::size_t{0});
      if (cfg.schedule.enabled) {
        const Released rel = filter_supervised(asr, xs_clean, ys, schedule, t);
        keep = rel.index;
        released_frac = rel.fraction();
      }
      std::vector<const FeatureSeq*> kx;
      std::vector<const TokenSeq*> ky;
      for (std::size_t i : keep) {
        kx.push_back(xs_clean[i]);
        ky.push_back(ys[i]);
      }
      const double sup_loss = asr_supervised_loss(asr, maybe_augment(kx, sup_aug), ky);
      if (!std::isfinite(sup_loss)) throw NumericError("supervised loss is not finite");
      loss += sup_loss;
      if (train_tts) {
        const double tts_loss = tts_supervised_loss(*models.tts, ys, xs_clean);
        if (!std::isfinite(tts_loss)) throw NumericError("TTS supervised loss is not finite");
        loss += tts_loss;
      }
      step_all();
    } catch (const NumericError& e) {
      throw DivergenceError("cycle training diverged at step " + std::to_string(t) + ": " +
                                e.what(),
                            snapshot(t), rows);
    }

    window.add(loss, reward, released_frac);
    const std::size_t done = t + 1;
    if (due(done, tc.log_interval, tc.total_steps)) {
      rows.push_back(window.flush(done, true));
    }
    if (due(done, tc.eval_interval, tc.total_steps)) {
      const EvalResult r = evaluate(asr, dev, tc.eval_max_len);
      MetricsRow row;
      row.step = done;
      row.phase = "eval";
      row.dev_ter = r.ter;
      row.dev_nll = r.nll;
      rows.push_back(row);
      log_info("train " + std::string(to_string(mode)) + " step " + std::to_string(done) +
               " dev_ter " + std::to_string(r.ter) + " dev_nll " + std::to_string(r.nll));
    }
  }
  return {snapshot(tc.total_steps), std::move(rows)};
}

}  // namespace cyc
