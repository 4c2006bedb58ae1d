#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "latermbr/types.h"

namespace latermbr {

inline constexpr int kMaxNgramOrder = 4;

// An n-gram of order 1..4. Unused token slots are zero so that the defaulted
// equality is well-defined.
struct NGram {
  std::array<Token, kMaxNgramOrder> tokens{};
  int8_t order = 0;

  static NGram slice(const TokenSeq& seq, size_t pos, int order);
  bool operator==(const NGram&) const = default;
};

struct NGramHash {
  size_t operator()(const NGram& g) const noexcept {
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](uint64_t v) {
      h ^= v;
      h *= 1099511628211ull;
    };
    mix(static_cast<uint64_t>(g.order));
    for (int i = 0; i < g.order; ++i) {
      mix(static_cast<uint32_t>(g.tokens[i]));
    }
    return static_cast<size_t>(h);
  }
};

// Sentence-level smoothed BLEU of `candidate` against `reference`:
//   p = 1/4 * sum_{n=1..4} log((matches_n + 1) / max(|cand| + 2 - n, 1))
//   BLEU = exp(min(1 - |ref|/|cand|, 0) + p)
// where matches_n clips each unique n-gram count of the candidate by the
// reference count. Numerator and denominator both carry the +1 smoothing;
// the denominator clamp keeps candidates shorter than n well-defined.
double smoothed_bleu(const TokenSeq& candidate, const TokenSeq& reference);

// Count matrix over the distinct n-grams (orders 1..4) of a candidate list.
// Row i holds the counts c^i of candidate i; order()[k] is the order g_k of
// column k. Column order is deterministic: first occurrence across the
// candidate list (candidate index, then order, then position).
class NGramIndex {
 public:
  // Universe collected from the candidates themselves.
  static NGramIndex build(const std::vector<TokenSeq>& candidates);
  // Counts against an explicitly given n-gram universe. The universe may
  // contain n-grams absent from every candidate (their columns stay zero),
  // but batch_bleu_matrix requires it to cover all candidate n-grams.
  static NGramIndex build(const std::vector<TokenSeq>& candidates,
                          const std::vector<NGram>& universe);

  int num_candidates() const { return num_candidates_; }
  int num_ngrams() const { return num_ngrams_; }
  int32_t count(int candidate, int column) const {
    return counts_[static_cast<size_t>(candidate) * num_ngrams_ + column];
  }
  const std::vector<int32_t>& counts() const { return counts_; }
  const std::vector<int8_t>& order() const { return order_; }
  const std::vector<int32_t>& lengths() const { return lengths_; }
  const std::vector<NGram>& universe() const { return universe_; }

  // Sum of counts of a given order for one candidate; equals
  // max(0, |y| + 1 - n) whenever the universe covers the candidate.
  int64_t order_count_sum(int candidate, int order) const;

 private:
  NGramIndex() = default;

  int num_candidates_ = 0;
  int num_ngrams_ = 0;
  std::vector<int32_t> counts_;  // row-major, num_candidates x num_ngrams
  std::vector<int8_t> order_;
  std::vector<int32_t> lengths_;
  std::vector<NGram> universe_;
};

// N x N matrix of smoothed BLEU values; rows index the candidate, columns the
// reference.
struct BleuMatrix {
  int n = 0;
  std::vector<double> values;  // row-major

  double at(int i, int j) const { return values[static_cast<size_t>(i) * n + j]; }
};

// Computes the full pairwise BLEU matrix from the count matrix: per-order
// clipped matches are element-wise minima summed over columns, so no pairwise
// string matching happens. Entries agree with smoothed_bleu bit-for-bit.
// Throws InvalidInputError if the index universe does not cover its candidates.
BleuMatrix batch_bleu_matrix(const NGramIndex& index);

// Rectangular block of the same matrix: result[r * cols.size() + c] =
// BLEU(candidate rows[r], candidate cols[c]). Used by rerankers whose
// candidate and evidence lists differ.
std::vector<double> batch_bleu_block(const NGramIndex& index,
                                     std::span<const int> rows,
                                     std::span<const int> cols);

}  // namespace latermbr
