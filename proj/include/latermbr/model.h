#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "latermbr/types.h"

namespace latermbr {

// Sentinel passed to step() before any target token has been emitted.
inline constexpr Token kBosToken = -1;

// Per-hypothesis decoder state. For the toy model this is the recent target
// history (last lm_order-1 tokens) plus the emitted length; custom models may
// use the fields as they see fit. Value type, cheap to clone.
struct ModelState {
  TokenSeq recent;
  int length = 0;

  bool operator==(const ModelState&) const = default;
};

// Log probabilities over the target vocabulary; the last entry is the
// end-of-sequence event. exp() of the entries sums to 1.
struct StepDistribution {
  std::vector<double> log_probs;

  Token eos_index() const { return static_cast<Token>(log_probs.size()) - 1; }
};

// Conditional sequence model p(y|x), factorized stepwise. Implementations
// must be deterministic and reentrant; states are per-hypothesis values.
class SequenceModel {
 public:
  virtual ~SequenceModel() = default;

  // Number of regular target tokens; ids 0..size-1. EOS is id size.
  virtual int target_vocab_size() const = 0;
  virtual ModelState initial_state(const TokenSeq& source) const = 0;
  virtual ModelState advance(const ModelState& state, Token token) const = 0;
  // Distribution over the next token given the history captured in `state`.
  virtual StepDistribution continuation(const TokenSeq& source,
                                        const ModelState& state) const = 0;

  // Longest output the decoder should attempt, counting the EOS step.
  virtual int max_output_length(const TokenSeq& source) const {
    return 2 * static_cast<int>(source.size()) + 5;
  }

  Token eos_id() const { return target_vocab_size(); }
};

// Advances `state` by `last_token` (kBosToken leaves the initial state
// untouched) and returns the next-token distribution with the new state.
std::pair<StepDistribution, ModelState> step(const SequenceModel& model,
                                             const TokenSeq& source,
                                             const ModelState& state,
                                             Token last_token);

// Stand-in for a neural translation model: a lexical table interpolated with
// a target n-gram language model, wrapped in a per-step end-of-sequence
// schedule. Source conditioning is order-free (mean over source tokens), so
// small instances are exactly enumerable.
class ToyModel : public SequenceModel {
 public:
  // lexical is row-major |source vocab| x |target vocab|, row-stochastic.
  // lm_counts maps target n-grams (length 1..lm_order) to corpus counts.
  ToyModel(std::vector<std::string> source_vocab,
           std::vector<std::string> target_vocab,
           std::vector<double> lexical,
           std::map<TokenSeq, int64_t> lm_counts, int lm_order, double add_k,
           double lambda, double eos_prob, int hard_max_len = 0);

  int source_vocab_size() const { return static_cast<int>(source_vocab_.size()); }
  int target_vocab_size() const override {
    return static_cast<int>(target_vocab_.size());
  }
  ModelState initial_state(const TokenSeq& source) const override;
  ModelState advance(const ModelState& state, Token token) const override;
  StepDistribution continuation(const TokenSeq& source,
                                const ModelState& state) const override;

  // Hard stop: EOS probability is 1 once the next token would be at this
  // position (hard_max_len == 0 keeps the base class default). EOS never
  // fires at position 1, so finished sequences keep at least one token.
  int max_output_length(const TokenSeq& source) const override;

  const std::vector<std::string>& source_vocab() const { return source_vocab_; }
  const std::vector<std::string>& target_vocab() const { return target_vocab_; }
  double lexical(Token source_token, Token target_token) const {
    return lexical_[static_cast<size_t>(source_token) * target_vocab_.size() +
                    target_token];
  }
  const std::map<TokenSeq, int64_t>& lm_counts() const { return lm_counts_; }
  int lm_order() const { return lm_order_; }
  double add_k() const { return add_k_; }
  double lambda() const { return lambda_; }
  double eos_prob() const { return eos_prob_; }
  int hard_max_len() const { return hard_max_len_; }

  Token source_id(const std::string& token) const;  // unknown -> kUnkId
  Token target_id(const std::string& token) const;

  bool operator==(const ToyModel& other) const;

  static constexpr Token kUnkId = 0;
  static constexpr const char* kUnkToken = "<unk>";

 private:
  double lm_continuation(const TokenSeq& history, Token token) const;

  std::vector<std::string> source_vocab_;
  std::vector<std::string> target_vocab_;
  std::unordered_map<std::string, Token> source_ids_;
  std::unordered_map<std::string, Token> target_ids_;
  std::vector<double> lexical_;
  std::map<TokenSeq, int64_t> lm_counts_;
  // Continuation totals per history (sum over observed next tokens).
  std::map<TokenSeq, int64_t> lm_context_totals_;
  int lm_order_;
  double add_k_;
  double lambda_;
  double eos_prob_;
  int hard_max_len_;
};

struct SentencePair {
  std::vector<std::string> source;
  std::vector<std::string> target;
};

// Corpus format: one pair per line, source and target separated by a tab,
// tokens by single spaces.
std::vector<SentencePair> read_parallel_corpus(const std::string& path);

// Lexical table from normalized co-occurrence counts (rows with no
// observations become uniform); language model from add-k-smoothed target
// n-gram counts; EOS hazard from the inverse mean target length.
ToyModel estimate_toy_model(const std::vector<SentencePair>& corpus,
                            int lm_order, double add_k, double lambda);

void save_model(const ToyModel& model, const std::string& path);
ToyModel load_model(const std::string& path);

}  // namespace latermbr
