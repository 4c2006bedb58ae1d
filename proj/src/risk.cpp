#include "latermbr/risk.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace latermbr {

std::vector<double> evidence_probs(const std::vector<Evidence>& evidences) {
  if (evidences.empty()) {
    throw InvalidInputError("evidence_probs: empty evidence list");
  }
  double max_lp = -std::numeric_limits<double>::infinity();
  for (const Evidence& e : evidences) {
    if (!std::isfinite(e.avg_logprob)) {
      throw InvalidInputError("evidence_probs: non-finite avg_logprob");
    }
    max_lp = std::max(max_lp, e.avg_logprob);
  }
  std::vector<double> probs(evidences.size());
  double norm = 0.0;
  for (size_t i = 0; i < evidences.size(); ++i) {
    probs[i] = std::exp(evidences[i].avg_logprob - max_lp);
    norm += probs[i];
  }
  for (double& p : probs) {
    p /= norm;
  }
  return probs;
}

EvidenceSpace::EvidenceSpace(std::vector<Evidence> evidences)
    : evidences_(std::move(evidences)), probs_(evidence_probs(evidences_)) {}

double ExactBleuDiscrepancy::pair(const TokenSeq& y,
                                  const TokenSeq& y_prime) const {
  return 1.0 - smoothed_bleu(y, y_prime);
}

std::vector<double> ExactBleuDiscrepancy::block(
    const std::vector<TokenSeq>& candidates,
    const std::vector<TokenSeq>& evidences) const {
  const size_t n = candidates.size();
  const size_t k = evidences.size();
  if (candidates == evidences) {
    // Self-reranking: one square matrix over a single index.
    const BleuMatrix bleu = batch_bleu_matrix(NGramIndex::build(candidates));
    std::vector<double> delta(bleu.values.size());
    for (size_t i = 0; i < delta.size(); ++i) {
      delta[i] = 1.0 - bleu.values[i];
    }
    return delta;
  }
  std::vector<TokenSeq> all;
  all.reserve(n + k);
  all.insert(all.end(), candidates.begin(), candidates.end());
  all.insert(all.end(), evidences.begin(), evidences.end());
  const NGramIndex index = NGramIndex::build(all);
  std::vector<int> rows(n), cols(k);
  std::iota(rows.begin(), rows.end(), 0);
  std::iota(cols.begin(), cols.end(), static_cast<int>(n));
  std::vector<double> delta = batch_bleu_block(index, rows, cols);
  for (double& d : delta) {
    d = 1.0 - d;
  }
  return delta;
}

double bayes_risk(const TokenSeq& y, const EvidenceSpace& space,
                  const DiscrepancySource& delta) {
  double risk = 0.0;
  for (size_t j = 0; j < space.size(); ++j) {
    risk += delta.pair(y, space.evidences()[j].seq) * space.probs()[j];
  }
  return risk;
}

namespace {

// Shared ordering: risk ascending, avg_logprob descending, index ascending.
std::vector<int> ranked_indices(const std::vector<double>& risks,
                                const std::vector<Evidence>& candidates) {
  std::vector<int> ranking(risks.size());
  std::iota(ranking.begin(), ranking.end(), 0);
  std::sort(ranking.begin(), ranking.end(), [&](int a, int b) {
    if (risks[a] != risks[b]) return risks[a] < risks[b];
    if (candidates[a].avg_logprob != candidates[b].avg_logprob) {
      return candidates[a].avg_logprob > candidates[b].avg_logprob;
    }
    return a < b;
  });
  return ranking;
}

}  // namespace

RiskReport mbr_rerank(const std::vector<Evidence>& candidates,
                      const EvidenceSpace& space,
                      const DiscrepancySource& delta) {
  if (candidates.empty()) {
    throw InvalidInputError("mbr_rerank: empty candidate list");
  }
  std::vector<TokenSeq> cand_seqs, evid_seqs;
  cand_seqs.reserve(candidates.size());
  for (const Evidence& c : candidates) cand_seqs.push_back(c.seq);
  evid_seqs.reserve(space.size());
  for (const Evidence& e : space.evidences()) evid_seqs.push_back(e.seq);

  const std::vector<double> delta_matrix = delta.block(cand_seqs, evid_seqs);

  RiskReport report;
  report.risks.resize(candidates.size());
  report.partial.assign(candidates.size(), false);
  const size_t k = space.size();
  for (size_t i = 0; i < candidates.size(); ++i) {
    double risk = 0.0;
    for (size_t j = 0; j < k; ++j) {
      risk += delta_matrix[i * k + j] * space.probs()[j];
    }
    report.risks[i] = risk;
  }
  report.ranking = ranked_indices(report.risks, candidates);
  return report;
}

RiskReport naive_rerank_early_stop(const std::vector<Evidence>& candidates,
                                   const EvidenceSpace& space,
                                   const DiscrepancySource& delta) {
  if (candidates.empty()) {
    throw InvalidInputError("naive_rerank_early_stop: empty candidate list");
  }
  RiskReport report;
  report.risks.resize(candidates.size());
  report.partial.assign(candidates.size(), false);

  double best_risk = std::numeric_limits<double>::infinity();
  int best_index = -1;
  for (size_t i = 0; i < candidates.size(); ++i) {
    double sum = 0.0;
    bool abandoned = false;
    for (size_t j = 0; j < space.size(); ++j) {
      sum += delta.pair(candidates[i].seq, space.evidences()[j].seq) *
             space.probs()[j];
      if (sum > best_risk) {
        abandoned = true;
        break;
      }
    }
    report.risks[i] = sum;
    report.partial[i] = abandoned;
    if (!abandoned) {
      const bool better =
          best_index < 0 || sum < best_risk ||
          (sum == best_risk && candidates[i].avg_logprob >
                                   candidates[best_index].avg_logprob);
      if (better) {
        best_risk = sum;
        best_index = static_cast<int>(i);
      }
    }
  }
  report.ranking = ranked_indices(report.risks, candidates);
  return report;
}

}  // namespace latermbr
