#include "latermbr/search.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <utility>

namespace latermbr {

namespace {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

Hypothesis make_child(const SequenceModel& model, const Hypothesis& parent,
                      Token token, double logprob, Token eos, uint64_t id) {
  Hypothesis child;
  child.sum_logprob = parent.sum_logprob + logprob;
  child.steps = parent.steps + 1;
  child.id = id;
  child.tokens = parent.tokens;
  if (token == eos) {
    child.state = parent.state;
    child.finished = true;
  } else {
    child.tokens.push_back(token);
    child.state = model.advance(parent.state, token);
    child.finished = false;
  }
  return child;
}

// (avg_logprob desc, id asc): the ordering used for beams and pools.
bool better_by_avg(const Hypothesis& a, const Hypothesis& b) {
  const double av = a.avg_logprob();
  const double bv = b.avg_logprob();
  if (av != bv) return av > bv;
  return a.id < b.id;
}

struct Expansion {
  size_t parent;  // index into the expanded pool
  Token token;
  double logprob;
  double avg;
  uint64_t parent_id;
};

}  // namespace

Evidence to_evidence(const Hypothesis& hyp, Token eos_id) {
  Evidence e;
  e.seq = hyp.tokens.empty() ? TokenSeq{eos_id} : hyp.tokens;
  e.avg_logprob = hyp.avg_logprob();
  return e;
}

BeamResult beam_search(const SequenceModel& model, const TokenSeq& source,
                       int beam_size, int max_length) {
  if (beam_size < 1) {
    throw InvalidInputError("beam_search: beam_size must be positive");
  }
  const int limit =
      max_length > 0 ? max_length : model.max_output_length(source);
  const Token eos = model.eos_id();
  const size_t b = static_cast<size_t>(beam_size);

  uint64_t next_id = 1;
  Hypothesis root;
  root.state = model.initial_state(source);

  std::vector<Hypothesis> beam;
  beam.push_back(std::move(root));
  BeamResult result;

  for (int step = 1; step <= limit; ++step) {
    if (beam.empty() || result.finished.size() >= b) break;

    std::vector<Expansion> expansions;
    for (size_t i = 0; i < beam.size(); ++i) {
      const StepDistribution dist = model.continuation(source, beam[i].state);
      for (Token tok = 0; tok < static_cast<Token>(dist.log_probs.size());
           ++tok) {
        const double lp = dist.log_probs[tok];
        if (!std::isfinite(lp)) continue;
        Expansion e;
        e.parent = i;
        e.token = tok;
        e.logprob = lp;
        e.avg = (beam[i].sum_logprob + lp) / (beam[i].steps + 1);
        e.parent_id = beam[i].id;
        expansions.push_back(e);
      }
    }
    std::sort(expansions.begin(), expansions.end(),
              [](const Expansion& a, const Expansion& b) {
                if (a.avg != b.avg) return a.avg > b.avg;
                if (a.parent_id != b.parent_id) return a.parent_id < b.parent_id;
                return a.token < b.token;
              });

    std::vector<Hypothesis> next_beam;
    for (size_t r = 0; r < expansions.size() && r < 2 * b; ++r) {
      const Expansion& e = expansions[r];
      if (r < b) {
        Hypothesis child = make_child(model, beam[e.parent], e.token,
                                      e.logprob, eos, next_id++);
        if (child.finished) {
          result.finished.push_back(std::move(child));
        } else {
          next_beam.push_back(std::move(child));
        }
      } else if (e.token != eos) {
        result.discarded.push_back(
            make_child(model, beam[e.parent], e.token, e.logprob, eos,
                       next_id++));
      }
    }
    beam = std::move(next_beam);
  }

  std::sort(result.finished.begin(), result.finished.end(), better_by_avg);
  if (result.finished.size() > b) result.finished.resize(b);
  return result;
}

double score_hypothesis(const Hypothesis& hyp, const EvidenceSpace& space,
                        const DiscrepancySource& delta, int t, int T,
                        double alpha, double beta) {
  if (t < 1 || t > T) {
    throw InvalidInputError("score_hypothesis: t must be in [1, T]");
  }
  const double risk = bayes_risk(hyp.tokens, space, delta);
  return hyp.avg_logprob() - alpha * risk -
         beta * (T - t) * static_cast<double>(hyp.tokens.size());
}

DecodeResult later_stage_mbr_decode(const SequenceModel& model,
                                    const TokenSeq& source,
                                    const DecodeConfig& config,
                                    const DiscrepancySource& delta) {
  if (config.beam_size < 1) {
    throw InvalidInputError("later_stage_mbr_decode: beam_size must be positive");
  }
  if (config.rerank_pool_factor < 1) {
    throw InvalidInputError(
        "later_stage_mbr_decode: rerank_pool_factor must be positive");
  }
  if (config.alpha < 0.0 || config.beta < 0.0) {
    throw InvalidInputError("later_stage_mbr_decode: alpha and beta must be >= 0");
  }

  const size_t b = static_cast<size_t>(config.beam_size);
  const int T = config.extra_steps >= 0 ? config.extra_steps
                                        : static_cast<int>(source.size());
  const int limit = config.max_length > 0 ? config.max_length
                                          : model.max_output_length(source);
  const Token eos = model.eos_id();

  BeamResult seed = beam_search(model, source, config.beam_size,
                                config.max_length);
  std::vector<Hypothesis> E = std::move(seed.finished);
  std::vector<Hypothesis> H = std::move(seed.discarded);

  uint64_t next_id = 1;
  for (const Hypothesis& h : E) next_id = std::max(next_id, h.id + 1);
  for (const Hypothesis& h : H) next_id = std::max(next_id, h.id + 1);

  DecodeResult out;
  out.trace.push_back("step=0 action=init H=" + std::to_string(H.size()) +
                      " E=" + std::to_string(E.size()));

  for (int t = 1; t <= T; ++t) {
    if (H.empty()) {
      out.trace.push_back("step=" + std::to_string(t) + " action=noop");
      continue;
    }

    // Top pool_factor*B of H by average log probability.
    const size_t pool_size =
        std::min(H.size(), b * static_cast<size_t>(config.rerank_pool_factor));
    std::vector<size_t> order(H.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::partial_sort(order.begin(), order.begin() + pool_size, order.end(),
                      [&](size_t x, size_t y) {
                        return better_by_avg(H[x], H[y]);
                      });
    order.resize(pool_size);

    out.trace.push_back("step=" + std::to_string(t) +
                        " action=pool size=" + std::to_string(pool_size) +
                        " H=" + std::to_string(H.size()) +
                        " E=" + std::to_string(E.size()));

    // Batch risks of the pool against the current evidence space.
    std::vector<double> risks(pool_size, 0.0);
    if (!E.empty()) {
      std::vector<Evidence> evs;
      evs.reserve(E.size());
      for (const Hypothesis& h : E) evs.push_back(to_evidence(h, eos));
      const EvidenceSpace space(std::move(evs));
      std::vector<TokenSeq> cands;
      cands.reserve(pool_size);
      for (size_t idx : order) cands.push_back(H[idx].tokens);
      std::vector<TokenSeq> ev_seqs;
      ev_seqs.reserve(space.size());
      for (const Evidence& e : space.evidences()) ev_seqs.push_back(e.seq);
      const std::vector<double> block = delta.block(cands, ev_seqs);
      for (size_t i = 0; i < pool_size; ++i) {
        double r = 0.0;
        for (size_t j = 0; j < space.size(); ++j) {
          r += block[i * space.size() + j] * space.probs()[j];
        }
        risks[i] = r;
      }
    }

    std::vector<double> scores(pool_size);
    for (size_t i = 0; i < pool_size; ++i) {
      const Hypothesis& h = H[order[i]];
      scores[i] = h.avg_logprob() - config.alpha * risks[i] -
                  config.beta * (T - t) *
                      static_cast<double>(h.tokens.size());
    }

    std::vector<size_t> by_score(pool_size);
    for (size_t i = 0; i < pool_size; ++i) by_score[i] = i;
    std::sort(by_score.begin(), by_score.end(), [&](size_t x, size_t y) {
      if (scores[x] != scores[y]) return scores[x] > scores[y];
      return H[order[x]].id < H[order[y]].id;
    });

    const size_t pop_count = std::min(b, pool_size);
    std::vector<Hypothesis> popped;
    std::vector<bool> remove(H.size(), false);
    popped.reserve(pop_count);
    for (size_t r = 0; r < pop_count; ++r) {
      const size_t idx = order[by_score[r]];
      remove[idx] = true;
      out.trace.push_back(
          "step=" + std::to_string(t) + " action=pop id=" +
          std::to_string(H[idx].id) + " len=" +
          std::to_string(H[idx].tokens.size()) + " avg=" +
          fmt_g(H[idx].avg_logprob()) + " risk=" + fmt_g(risks[by_score[r]]) +
          " score=" + fmt_g(scores[by_score[r]]));
      popped.push_back(std::move(H[idx]));
    }
    std::vector<Hypothesis> kept;
    kept.reserve(H.size() - pop_count);
    for (size_t i = 0; i < H.size(); ++i) {
      if (!remove[i]) kept.push_back(std::move(H[i]));
    }
    H = std::move(kept);

    // Expand each popped hypothesis to its top-B next tokens.
    for (const Hypothesis& parent : popped) {
      const StepDistribution dist = model.continuation(source, parent.state);
      std::vector<std::pair<double, Token>> steps;
      for (Token tok = 0; tok < static_cast<Token>(dist.log_probs.size());
           ++tok) {
        const double lp = dist.log_probs[tok];
        if (!std::isfinite(lp)) continue;
        steps.emplace_back(lp, tok);
      }
      std::sort(steps.begin(), steps.end(),
                [](const std::pair<double, Token>& a,
                   const std::pair<double, Token>& b) {
                  if (a.first != b.first) return a.first > b.first;
                  return a.second < b.second;
                });
      if (steps.size() > b) steps.resize(b);

      for (const auto& [lp, tok] : steps) {
        Hypothesis child = make_child(model, parent, tok, lp, eos, next_id++);
        if (child.finished) {
          if (E.size() < b) {
            out.trace.push_back("step=" + std::to_string(t) +
                                " action=finish id=" + std::to_string(child.id) +
                                " parent=" + std::to_string(parent.id) +
                                " avg=" + fmt_g(child.avg_logprob()));
            E.push_back(std::move(child));
          } else {
            size_t worst = 0;
            for (size_t i = 1; i < E.size(); ++i) {
              if (better_by_avg(E[worst], E[i])) worst = i;
            }
            if (better_by_avg(child, E[worst])) {
              out.trace.push_back("step=" + std::to_string(t) +
                                  " action=evict id=" +
                                  std::to_string(E[worst].id));
              out.trace.push_back("step=" + std::to_string(t) +
                                  " action=finish id=" +
                                  std::to_string(child.id) + " parent=" +
                                  std::to_string(parent.id) + " avg=" +
                                  fmt_g(child.avg_logprob()));
              E[worst] = std::move(child);
            } else {
              out.trace.push_back("step=" + std::to_string(t) +
                                  " action=drop-finished id=" +
                                  std::to_string(child.id));
            }
          }
        } else if (static_cast<int>(child.tokens.size()) >= limit) {
          out.trace.push_back("step=" + std::to_string(t) +
                              " action=drop-maxlen id=" +
                              std::to_string(child.id));
        } else {
          out.trace.push_back("step=" + std::to_string(t) +
                              " action=push id=" + std::to_string(child.id) +
                              " parent=" + std::to_string(parent.id) +
                              " len=" + std::to_string(child.tokens.size()));
          H.push_back(std::move(child));
        }
      }
    }
  }

  if (E.empty()) {
    throw DecodeError("later_stage_mbr_decode: no finished hypothesis");
  }

  std::vector<Evidence> final_evs;
  final_evs.reserve(E.size());
  for (const Hypothesis& h : E) final_evs.push_back(to_evidence(h, eos));
  const EvidenceSpace space(final_evs);
  out.report = mbr_rerank(final_evs, space, delta);
  out.output = E[static_cast<size_t>(out.report.best())];
  out.evidence = std::move(E);
  out.trace.push_back("final action=output id=" +
                      std::to_string(out.output.id) + " risk=" +
                      fmt_g(out.report.risks[static_cast<size_t>(
                          out.report.best())]) +
                      " len=" + std::to_string(out.output.tokens.size()));
  return out;
}

}  // namespace latermbr
