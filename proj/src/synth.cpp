#include "latermbr/synth.h"

#include <map>
#include <string>

namespace latermbr {

namespace {

double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * (1.0 / 9007199254740992.0);
}

// Uniform int in [0, n); modulo bias is irrelevant at these ranges.
int uniform_int(std::mt19937_64& gen, int n) {
  return static_cast<int>(gen() % static_cast<uint64_t>(n));
}

std::vector<std::string> make_vocab(const char* prefix, int size) {
  std::vector<std::string> vocab{ToyModel::kUnkToken};
  for (int k = 1; k < size; ++k) {
    vocab.push_back(prefix + std::to_string(k));
  }
  return vocab;
}

}  // namespace

ToyModel random_toy_model(std::mt19937_64& gen, const SynthScale& scale) {
  if (scale.source_vocab < 2 || scale.target_vocab < 2) {
    throw InvalidInputError("random_toy_model: vocab must hold <unk> plus content");
  }
  const int vs = scale.source_vocab;
  const int vt = scale.target_vocab;

  // Fourth-power draws make each source token prefer a few targets.
  std::vector<double> lexical(static_cast<size_t>(vs) * vt);
  for (int s = 0; s < vs; ++s) {
    double row_sum = 0.0;
    for (int t = 0; t < vt; ++t) {
      const double u = uniform01(gen);
      const double w = u * u * u * u + 1e-4;
      lexical[static_cast<size_t>(s) * vt + t] = w;
      row_sum += w;
    }
    for (int t = 0; t < vt; ++t) {
      lexical[static_cast<size_t>(s) * vt + t] /= row_sum;
    }
  }

  std::map<TokenSeq, int64_t> lm_counts;
  for (int sent = 0; sent < scale.corpus_sentences; ++sent) {
    const int len = 1 + uniform_int(gen, scale.corpus_max_len);
    TokenSeq tgt(len);
    for (int k = 0; k < len; ++k) {
      tgt[k] = static_cast<Token>(1 + uniform_int(gen, vt - 1));
    }
    for (int n = 1; n <= scale.lm_order; ++n) {
      for (size_t pos = 0; pos + n <= tgt.size(); ++pos) {
        TokenSeq gram(tgt.begin() + static_cast<ptrdiff_t>(pos),
                      tgt.begin() + static_cast<ptrdiff_t>(pos + n));
        ++lm_counts[gram];
      }
    }
  }

  const double lambda = 0.5 + 0.4 * uniform01(gen);
  const double eos_prob = 0.08 + 0.12 * uniform01(gen);
  return ToyModel(make_vocab("s", vs), make_vocab("t", vt),
                  std::move(lexical), std::move(lm_counts), scale.lm_order,
                  scale.add_k, lambda, eos_prob, scale.hard_max_len);
}

TokenSeq random_source(std::mt19937_64& gen, const ToyModel& model,
                       int min_len, int max_len) {
  if (min_len < 1 || max_len < min_len) {
    throw InvalidInputError("random_source: bad length range");
  }
  const int len = min_len + uniform_int(gen, max_len - min_len + 1);
  TokenSeq source(len);
  for (int k = 0; k < len; ++k) {
    source[k] =
        static_cast<Token>(1 + uniform_int(gen, model.source_vocab_size() - 1));
  }
  return source;
}

std::vector<Evidence> random_candidates(std::mt19937_64& gen, int count,
                                        int vocab, int min_len, int max_len) {
  if (count < 1 || vocab < 1 || min_len < 1 || max_len < min_len) {
    throw InvalidInputError("random_candidates: bad parameters");
  }
  std::vector<Evidence> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    Evidence e;
    const int len = min_len + uniform_int(gen, max_len - min_len + 1);
    e.seq.resize(len);
    for (int i = 0; i < len; ++i) {
      e.seq[i] = static_cast<Token>(uniform_int(gen, vocab));
    }
    e.avg_logprob = -3.0 * uniform01(gen);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace latermbr
