// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/harness/evaluate.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "cyc/autodiff/tape.hpp"
#include "cyc/errors.hpp"

namespace cyc {

namespace {

void require_labeled(const Dataset& split, bool features) {
  if (split.size() == 0) throw ContractError("split '" + split.name + "' is empty");
  if (!split.has_tokens()) throw ContractError("split '" + split.name + "' has no transcripts");
  if (features && !split.has_features()) {
    throw ContractError("split '" + split.name + "' has no features");
  }
}

template <class T>
std::vector<const T*> pointers(const std::vector<T>& v, std::size_t begin, std::size_t end) {
  std::vector<const T*> out;
  out.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) out.push_back(&v[i]);
  return out;
}

double sum_values(const ad::Var& v) {
  const auto d = v.value().data();
  return std::accumulate(d.begin(), d.end(), 0.0);
}

}  // namespace

std::size_t edit_distance(std::span<const int> ref, std::span<const int> hyp) {
  std::vector<std::size_t> row(hyp.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= hyp.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      row[j] = std::min({sub, up + 1, row[j - 1] + 1});
      diag = up;
    }
  }
  return row[hyp.size()];
}

EvalResult evaluate(const AsrModel& asr, const Dataset& split, std::size_t max_len,
                    std::size_t chunk) {
  require_labeled(split, true);
  ad::NoGradGuard no_grad;
  EvalResult r;
  double nll_sum = 0.0;
  std::size_t nll_tokens = 0;
  for (std::size_t b = 0; b < split.size(); b += chunk) {
    const std::size_t e = std::min(split.size(), b + chunk);
    const auto xs = pointers(split.features, b, e);
    const auto ys = pointers(split.tokens, b, e);
    const auto hyps = asr.greedy_batch(xs, 1.0, max_len);
    for (std::size_t i = 0; i < ys.size(); ++i) {
      r.edits += edit_distance(ys[i]->ids, hyps[i].seq.ids);
      r.ref_tokens += ys[i]->size();
      nll_tokens += ys[i]->size() + 1;
    }
    nll_sum += sum_values(asr.nll_batch(xs, ys, std::nullopt));
  }
  r.ter = static_cast<double>(r.edits) / static_cast<double>(r.ref_tokens);
  r.nll = nll_sum / static_cast<double>(nll_tokens);
  return r;
}

double tts_dev_loss(const TtsModel& tts, const Dataset& split, std::size_t chunk) {
  require_labeled(split, true);
  ad::NoGradGuard no_grad;
  double sum = 0.0;
  std::size_t frames = 0;
  for (std::size_t b = 0; b < split.size(); b += chunk) {
    const std::size_t e = std::min(split.size(), b + chunk);
    const auto xs = pointers(split.features, b, e);
    const auto ys = pointers(split.tokens, b, e);
    sum += sum_values(tts.teacher_forced_batch(ys, xs).total);
    for (const FeatureSeq* x : xs) frames += x->frames();
  }
  return sum / static_cast<double>(frames);
}

double lm_dev_nll(const LmModel& lm, const Dataset& split, std::size_t chunk) {
  require_labeled(split, false);
  ad::NoGradGuard no_grad;
  double sum = 0.0;
  std::size_t tokens = 0;
  for (std::size_t b = 0; b < split.size(); b += chunk) {
    const std::size_t e = std::min(split.size(), b + chunk);
    const auto ys = pointers(split.tokens, b, e);
    sum += sum_values(lm.nll_batch(ys));
    for (const TokenSeq* y : ys) tokens += y->size() + 1;
  }
  return sum / static_cast<double>(tokens);
}

}  // namespace cyc
