#include "latermbr/candidate_io.h"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "latermbr/io_util.h"

namespace latermbr {

std::vector<CandidateSet> read_candidates(std::istream& in) {
  std::vector<CandidateSet> sets;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const size_t tab1 = line.find('\t');
    const size_t tab2 = tab1 == std::string::npos
                            ? std::string::npos
                            : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) {
      throw ParseError("candidate line needs id, avg_logprob, tokens",
                       line_no);
    }
    const std::string id = line.substr(0, tab1);
    if (id.empty()) {
      throw ParseError("empty sentence id", line_no);
    }

    CandidateEntry entry;
    std::istringstream lp(line.substr(tab1 + 1, tab2 - tab1 - 1));
    if (!(lp >> entry.avg_logprob) || !std::isfinite(entry.avg_logprob)) {
      throw ParseError("bad avg_logprob", line_no);
    }
    std::istringstream toks(line.substr(tab2 + 1));
    std::string tok;
    while (toks >> tok) entry.tokens.push_back(tok);
    if (entry.tokens.empty()) {
      throw ParseError("candidate with no tokens", line_no);
    }

    if (sets.empty() || sets.back().id != id) {
      if (!seen_ids.insert(id).second) {
        throw ParseError("sentence id repeats non-consecutively: " + id,
                         line_no);
      }
      sets.push_back(CandidateSet{id, {}});
    }
    sets.back().entries.push_back(std::move(entry));
  }
  return sets;
}

std::vector<CandidateSet> read_candidate_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open candidate file: " + path, 0);
  }
  return read_candidates(in);
}

void write_candidates(std::ostream& out,
                      const std::vector<CandidateSet>& sets) {
  for (const CandidateSet& set : sets) {
    for (const CandidateEntry& entry : set.entries) {
      out << set.id << "\t" << fmt_double(entry.avg_logprob) << "\t";
      for (size_t k = 0; k < entry.tokens.size(); ++k) {
        if (k > 0) out << " ";
        out << entry.tokens[k];
      }
      out << "\n";
    }
  }
}

std::vector<Evidence> to_evidence(const CandidateSet& set) {
  std::unordered_map<std::string, Token> ids;
  std::vector<Evidence> out;
  out.reserve(set.entries.size());
  for (const CandidateEntry& entry : set.entries) {
    Evidence e;
    e.avg_logprob = entry.avg_logprob;
    e.seq.reserve(entry.tokens.size());
    for (const std::string& tok : entry.tokens) {
      auto it = ids.emplace(tok, static_cast<Token>(ids.size())).first;
      e.seq.push_back(it->second);
    }
    out.push_back(std::move(e));
  }
  return out;
}

void write_ranked(std::ostream& out, const CandidateSet& set,
                  const RiskReport& report) {
  for (size_t rank = 0; rank < report.ranking.size(); ++rank) {
    const int idx = report.ranking[rank];
    const CandidateEntry& entry = set.entries[static_cast<size_t>(idx)];
    out << set.id << "\t" << rank + 1 << "\t"
        << fmt_double(report.risks[static_cast<size_t>(idx)])
        << (report.partial[static_cast<size_t>(idx)] ? "*" : "") << "\t"
        << fmt_double(entry.avg_logprob) << "\t";
    for (size_t k = 0; k < entry.tokens.size(); ++k) {
      if (k > 0) out << " ";
      out << entry.tokens[k];
    }
    out << "\n";
  }
}

}  // namespace latermbr
