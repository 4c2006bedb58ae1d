#pragma once

#include <vector>

#include "latermbr/ngram_bleu.h"
#include "latermbr/types.h"

namespace latermbr {

// A finished candidate: token sequence (EOS stripped) plus its mean per-token
// log probability under the generating model.
struct Evidence {
  TokenSeq seq;
  double avg_logprob = 0.0;
};

// Softmax over the average log probabilities of a list of evidences.
std::vector<double> evidence_probs(const std::vector<Evidence>& evidences);

// Finished candidates with their softmax-normalized probabilities p(y'|x).
class EvidenceSpace {
 public:
  explicit EvidenceSpace(std::vector<Evidence> evidences);

  const std::vector<Evidence>& evidences() const { return evidences_; }
  const std::vector<double>& probs() const { return probs_; }
  size_t size() const { return evidences_.size(); }

 private:
  std::vector<Evidence> evidences_;
  std::vector<double> probs_;
};

// Source of discrepancy values Delta(y, y'). Implemented by the exact
// smoothed-BLEU kernel below and by the neural approximator (approx module).
class DiscrepancySource {
 public:
  virtual ~DiscrepancySource() = default;

  virtual double pair(const TokenSeq& y, const TokenSeq& y_prime) const = 0;

  // Row-major |candidates| x |evidences| matrix of discrepancies, computed in
  // one batch.
  virtual std::vector<double> block(
      const std::vector<TokenSeq>& candidates,
      const std::vector<TokenSeq>& evidences) const = 0;
};

// Delta(y, y') = 1 - smoothed_bleu(y, y'). block() goes through the batch
// count-matrix kernel rather than pairwise matching.
class ExactBleuDiscrepancy : public DiscrepancySource {
 public:
  double pair(const TokenSeq& y, const TokenSeq& y_prime) const override;
  std::vector<double> block(
      const std::vector<TokenSeq>& candidates,
      const std::vector<TokenSeq>& evidences) const override;
};

// R(y) = sum_{y' in E} Delta(y, y') p(y'|x).
double bayes_risk(const TokenSeq& y, const EvidenceSpace& space,
                  const DiscrepancySource& delta);

// Risks and the induced ranking of a candidate list. ranking is sorted by
// risk ascending, ties broken by avg_logprob descending, then candidate index
// ascending. partial[i] marks risks reported as lower bounds by the
// early-stopping reranker.
struct RiskReport {
  std::vector<double> risks;
  std::vector<int> ranking;
  std::vector<bool> partial;

  int best() const { return ranking.front(); }
};

// MBR reranking via one batch discrepancy matrix. Rank 1 is the MBR output.
RiskReport mbr_rerank(const std::vector<Evidence>& candidates,
                      const EvidenceSpace& space,
                      const DiscrepancySource& delta);

// Standard reranker with early stopping: every term of the risk sum is
// non-negative, so a candidate is abandoned as soon as its partial sum
// exceeds the lowest completed risk. Selects the same rank-1 candidate as
// mbr_rerank; abandoned candidates report their partial sum with
// partial[i] = true.
RiskReport naive_rerank_early_stop(const std::vector<Evidence>& candidates,
                                   const EvidenceSpace& space,
                                   const DiscrepancySource& delta);

}  // namespace latermbr
