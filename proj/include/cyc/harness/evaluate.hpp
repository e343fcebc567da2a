// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "cyc/data/corpus.hpp"
#include "cyc/models/asr.hpp"
#include "cyc/models/lm.hpp"
#include "cyc/models/tts.hpp"

namespace cyc {

// Levenshtein distance with unit insertion, deletion and substitution costs.
std::size_t edit_distance(std::span<const int> ref, std::span<const int> hyp);

struct EvalResult {
  double ter = 0.0;  // total edits / total reference tokens
  double nll = 0.0;  // teacher-forced NLL per token, EOS counted as a token
  std::size_t edits = 0;
  std::size_t ref_tokens = 0;
};

// Greedy decoding at alpha = 1. ContractError on an empty or unlabeled split.
EvalResult evaluate(const AsrModel& asr, const Dataset& split, std::size_t max_len,
                    std::size_t chunk = 50);

// Teacher-forced TTS loss per frame over a labeled split.
double tts_dev_loss(const TtsModel& tts, const Dataset& split, std::size_t chunk = 50);
// LM NLL per token (EOS included) over the split's transcripts.
double lm_dev_nll(const LmModel& lm, const Dataset& split, std::size_t chunk = 100);

}  // namespace cyc
