#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "latermbr/risk.h"
#include "latermbr/types.h"

namespace latermbr {

// One candidate translation in text form.
struct CandidateEntry {
  std::vector<std::string> tokens;
  double avg_logprob = 0.0;
};

// All candidates of one sentence. File lines are
// "<id>\t<avg_logprob>\t<token token ...>"; lines of one sentence are
// consecutive and sentence ids are unique.
struct CandidateSet {
  std::string id;
  std::vector<CandidateEntry> entries;
};

std::vector<CandidateSet> read_candidate_file(const std::string& path);
std::vector<CandidateSet> read_candidates(std::istream& in);
void write_candidates(std::ostream& out, const std::vector<CandidateSet>& sets);

// Numeric view with per-sentence first-occurrence token ids.
std::vector<Evidence> to_evidence(const CandidateSet& set);

// Rerank output: "<id>\t<rank>\t<risk>[*]\t<avg_logprob>\t<tokens>" per
// candidate in ranking order; * marks an early-stopped partial risk.
void write_ranked(std::ostream& out, const CandidateSet& set,
                  const RiskReport& report);

}  // namespace latermbr
