#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "latermbr/model.h"
#include "latermbr/risk.h"
#include "latermbr/types.h"

namespace latermbr {

// Knobs for random toy problems. Vocabulary sizes include <unk> at id 0.
struct SynthScale {
  int source_vocab = 5;
  int target_vocab = 5;
  int lm_order = 2;
  double add_k = 0.5;
  int hard_max_len = 5;
  int corpus_sentences = 40;
  int corpus_max_len = 5;
};

// Peaked random lexical rows, an n-gram LM counted from a sampled corpus,
// and random mixture/stop settings. Fully determined by the generator state.
ToyModel random_toy_model(std::mt19937_64& gen, const SynthScale& scale);

// Random source of content tokens (ids 1..Vs-1), length in [min_len, max_len].
TokenSeq random_source(std::mt19937_64& gen, const ToyModel& model,
                       int min_len, int max_len);

// Random candidate lists for kernel and reranker stress tests: token ids in
// [0, vocab), lengths in [min_len, max_len], avg_logprob in [-3, 0).
std::vector<Evidence> random_candidates(std::mt19937_64& gen, int count,
                                        int vocab, int min_len, int max_len);

}  // namespace latermbr
