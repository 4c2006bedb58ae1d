#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "latermbr/model.h"
#include "latermbr/risk.h"
#include "latermbr/types.h"

namespace latermbr {

// A partial or finished output sequence. tokens excludes EOS; when finished,
// the EOS step still contributes to sum_logprob and steps. state is the
// decoder state after all emitted tokens. id is a stable creation index used
// for deterministic tie-breaking.
struct Hypothesis {
  TokenSeq tokens;
  double sum_logprob = 0.0;
  int steps = 0;
  ModelState state;
  bool finished = false;
  uint64_t id = 0;

  double avg_logprob() const {
    return steps > 0 ? sum_logprob / steps : 0.0;
  }
};

struct DecodeConfig {
  int beam_size = 5;
  // Extra MBR decoding steps T; negative picks the number of source words.
  int extra_steps = -1;
  double alpha = 1.0;
  double beta = 0.1;
  // Only the top pool_factor*B members of H by avg_logprob are scored each step.
  int rerank_pool_factor = 3;
  // 0 picks the model's own limit (2*|source|+5 for the toy model).
  int max_length = 0;
};

struct BeamResult {
  std::vector<Hypothesis> finished;   // top B by avg_logprob
  std::vector<Hypothesis> discarded;  // rank B+1..2B expansions of every step
};

// Standard beam search by average log probability. At every step the top-B
// expansions continue (finished ones leave the beam and accumulate) and the
// unfinished expansions ranked B+1..2B are saved to the discarded pool.
BeamResult beam_search(const SequenceModel& model, const TokenSeq& source,
                       int beam_size, int max_length = 0);

// S(y) = avg_logprob - alpha * R(y) - beta * (T - t) * |y|   (1 <= t <= T).
// At t = T the length term vanishes and hypotheses are selected only by
// confidence and risk.
double score_hypothesis(const Hypothesis& hyp, const EvidenceSpace& space,
                        const DiscrepancySource& delta, int t, int T,
                        double alpha, double beta);

struct DecodeResult {
  Hypothesis output;
  RiskReport report;                 // over the final evidence space
  std::vector<Hypothesis> evidence;  // final E, insertion order
  std::vector<std::string> trace;    // line-delimited step records
};

// Later-stage MBR decoding: seeds the hypothesis pool H with beam-search
// discards and the evidence space E with the top-B finished candidates, then
// runs T extra steps. Each step scores the top pool_factor*B members of H by
// avg_logprob, pops the B best by score, expands each to its top-B next
// tokens, routes finished expansions to E (capacity B, lowest-avg_logprob
// eviction) and unfinished ones back to H. The final output is the
// minimum-risk member of E.
DecodeResult later_stage_mbr_decode(const SequenceModel& model,
                                    const TokenSeq& source,
                                    const DecodeConfig& config,
                                    const DiscrepancySource& delta);

// Evidence view of a finished hypothesis. A hypothesis that finished with no
// content tokens is represented by the model's EOS id so discrepancies stay
// well-defined.
Evidence to_evidence(const Hypothesis& hyp, Token eos_id);

}  // namespace latermbr
