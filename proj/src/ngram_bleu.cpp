#include "latermbr/ngram_bleu.h"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace latermbr {

namespace {

using CountMap = std::unordered_map<NGram, int32_t, NGramHash>;

CountMap collect_counts(const TokenSeq& seq) {
  CountMap counts;
  const size_t len = seq.size();
  for (int n = 1; n <= kMaxNgramOrder; ++n) {
    if (len < static_cast<size_t>(n)) break;
    for (size_t pos = 0; pos + n <= len; ++pos) {
      ++counts[NGram::slice(seq, pos, n)];
    }
  }
  return counts;
}

// Single code path for the BLEU arithmetic so the scalar function and the
// batch kernel produce bit-identical values from the same match counts.
double bleu_from_matches(const std::array<int64_t, kMaxNgramOrder>& matches,
                         int candidate_len, int reference_len) {
  double log_p = 0.0;
  for (int n = 1; n <= kMaxNgramOrder; ++n) {
    const double num = static_cast<double>(matches[n - 1] + 1);
    const double den = static_cast<double>(std::max(candidate_len + 2 - n, 1));
    log_p += std::log(num / den);
  }
  log_p *= 0.25;
  const double brevity =
      std::min(1.0 - static_cast<double>(reference_len) /
                         static_cast<double>(candidate_len),
               0.0);
  return std::exp(brevity + log_p);
}

}  // namespace

NGram NGram::slice(const TokenSeq& seq, size_t pos, int order) {
  NGram g;
  g.order = static_cast<int8_t>(order);
  for (int i = 0; i < order; ++i) {
    g.tokens[i] = seq[pos + i];
  }
  return g;
}

double smoothed_bleu(const TokenSeq& candidate, const TokenSeq& reference) {
  if (candidate.empty() || reference.empty()) {
    throw InvalidInputError("smoothed_bleu: empty sequence");
  }
  const CountMap cand = collect_counts(candidate);
  const CountMap ref = collect_counts(reference);

  std::array<int64_t, kMaxNgramOrder> matches{};
  for (const auto& [gram, count] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) {
      matches[gram.order - 1] += std::min(count, it->second);
    }
  }
  return bleu_from_matches(matches, static_cast<int>(candidate.size()),
                           static_cast<int>(reference.size()));
}

NGramIndex NGramIndex::build(const std::vector<TokenSeq>& candidates) {
  if (candidates.empty()) {
    throw InvalidInputError("NGramIndex: empty candidate list");
  }
  std::vector<NGram> universe;
  std::unordered_map<NGram, int, NGramHash> column_of;
  for (const auto& cand : candidates) {
    if (cand.empty()) {
      throw InvalidInputError("NGramIndex: empty candidate");
    }
    const size_t len = cand.size();
    for (int n = 1; n <= kMaxNgramOrder; ++n) {
      if (len < static_cast<size_t>(n)) break;
      for (size_t pos = 0; pos + n <= len; ++pos) {
        const NGram g = NGram::slice(cand, pos, n);
        if (column_of.emplace(g, static_cast<int>(universe.size())).second) {
          universe.push_back(g);
        }
      }
    }
  }
  return build(candidates, universe);
}

NGramIndex NGramIndex::build(const std::vector<TokenSeq>& candidates,
                             const std::vector<NGram>& universe) {
  if (candidates.empty()) {
    throw InvalidInputError("NGramIndex: empty candidate list");
  }
  std::unordered_map<NGram, int, NGramHash> column_of;
  for (size_t k = 0; k < universe.size(); ++k) {
    if (universe[k].order < 1 || universe[k].order > kMaxNgramOrder) {
      throw InvalidInputError("NGramIndex: universe n-gram with bad order");
    }
    if (!column_of.emplace(universe[k], static_cast<int>(k)).second) {
      throw InvalidInputError("NGramIndex: duplicate n-gram in universe");
    }
  }

  NGramIndex index;
  index.num_candidates_ = static_cast<int>(candidates.size());
  index.num_ngrams_ = static_cast<int>(universe.size());
  index.universe_ = universe;
  index.order_.resize(universe.size());
  for (size_t k = 0; k < universe.size(); ++k) {
    index.order_[k] = universe[k].order;
  }
  index.lengths_.reserve(candidates.size());
  index.counts_.assign(candidates.size() * universe.size(), 0);

  for (size_t i = 0; i < candidates.size(); ++i) {
    const TokenSeq& cand = candidates[i];
    if (cand.empty()) {
      throw InvalidInputError("NGramIndex: empty candidate");
    }
    index.lengths_.push_back(static_cast<int32_t>(cand.size()));
    int32_t* row = index.counts_.data() + i * universe.size();
    const size_t len = cand.size();
    for (int n = 1; n <= kMaxNgramOrder; ++n) {
      if (len < static_cast<size_t>(n)) break;
      for (size_t pos = 0; pos + n <= len; ++pos) {
        auto it = column_of.find(NGram::slice(cand, pos, n));
        if (it != column_of.end()) {
          ++row[it->second];
        }
      }
    }
  }
  return index;
}

int64_t NGramIndex::order_count_sum(int candidate, int order) const {
  int64_t sum = 0;
  const int32_t* row = counts_.data() + static_cast<size_t>(candidate) * num_ngrams_;
  for (int k = 0; k < num_ngrams_; ++k) {
    if (order_[k] == order) sum += row[k];
  }
  return sum;
}

namespace {

// Columns of one order regrouped into a contiguous matrix so the min+add
// reduction over a candidate pair runs over dense rows.
struct OrderBlocks {
  std::array<std::vector<int32_t>, kMaxNgramOrder> counts;  // N x width[n]
  std::array<int, kMaxNgramOrder> width{};
};

OrderBlocks regroup_by_order(const NGramIndex& index) {
  OrderBlocks blocks;
  const int n_cand = index.num_candidates();
  const int m = index.num_ngrams();
  std::array<std::vector<int>, kMaxNgramOrder> cols;
  for (int k = 0; k < m; ++k) {
    cols[index.order()[k] - 1].push_back(k);
  }
  for (int n = 0; n < kMaxNgramOrder; ++n) {
    blocks.width[n] = static_cast<int>(cols[n].size());
    blocks.counts[n].resize(static_cast<size_t>(n_cand) * cols[n].size());
    for (int i = 0; i < n_cand; ++i) {
      int32_t* dst = blocks.counts[n].data() + static_cast<size_t>(i) * cols[n].size();
      for (size_t c = 0; c < cols[n].size(); ++c) {
        dst[c] = index.count(i, cols[n][c]);
      }
    }
  }
  return blocks;
}

void check_universe_covers(const NGramIndex& index) {
  for (int i = 0; i < index.num_candidates(); ++i) {
    const int len = index.lengths()[i];
    for (int n = 1; n <= kMaxNgramOrder; ++n) {
      const int64_t expected = std::max(0, len + 1 - n);
      if (index.order_count_sum(i, n) != expected) {
        throw InvalidInputError(
            "batch BLEU: index universe does not cover candidate n-grams");
      }
    }
  }
}

inline std::array<int64_t, kMaxNgramOrder> clipped_matches(
    const OrderBlocks& blocks, int i, int j) {
  std::array<int64_t, kMaxNgramOrder> matches{};
  for (int n = 0; n < kMaxNgramOrder; ++n) {
    const int w = blocks.width[n];
    if (w == 0) continue;
    const int32_t* a = blocks.counts[n].data() + static_cast<size_t>(i) * w;
    const int32_t* b = blocks.counts[n].data() + static_cast<size_t>(j) * w;
    int32_t m = 0;
    for (int k = 0; k < w; ++k) {
      m += std::min(a[k], b[k]);
    }
    matches[n] = m;
  }
  return matches;
}

}  // namespace

BleuMatrix batch_bleu_matrix(const NGramIndex& index) {
  check_universe_covers(index);
  const int n_cand = index.num_candidates();
  const OrderBlocks blocks = regroup_by_order(index);

  BleuMatrix result;
  result.n = n_cand;
  result.values.resize(static_cast<size_t>(n_cand) * n_cand);
  for (int i = 0; i < n_cand; ++i) {
    const int len_i = index.lengths()[i];
    for (int j = i; j < n_cand; ++j) {
      const int len_j = index.lengths()[j];
      // The clipped-match sums are symmetric; only the length terms differ.
      const auto matches = clipped_matches(blocks, i, j);
      result.values[static_cast<size_t>(i) * n_cand + j] =
          bleu_from_matches(matches, len_i, len_j);
      if (j != i) {
        result.values[static_cast<size_t>(j) * n_cand + i] =
            bleu_from_matches(matches, len_j, len_i);
      }
    }
  }
  return result;
}

std::vector<double> batch_bleu_block(const NGramIndex& index,
                                     std::span<const int> rows,
                                     std::span<const int> cols) {
  check_universe_covers(index);
  const OrderBlocks blocks = regroup_by_order(index);
  std::vector<double> values(rows.size() * cols.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    const int len_r = index.lengths()[rows[r]];
    for (size_t c = 0; c < cols.size(); ++c) {
      const auto matches = clipped_matches(blocks, rows[r], cols[c]);
      values[r * cols.size() + c] =
          bleu_from_matches(matches, len_r, index.lengths()[cols[c]]);
    }
  }
  return values;
}

}  // namespace latermbr
