#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "latermbr/search.h"
#include "latermbr/synth.h"
#include "reference_alg1.h"

using namespace latermbr;

namespace {

// Fixed-value discrepancy for isolating the score arithmetic.
class ConstantDelta : public DiscrepancySource {
 public:
  explicit ConstantDelta(double value) : value_(value) {}
  double pair(const TokenSeq&, const TokenSeq&) const override {
    return value_;
  }
  std::vector<double> block(
      const std::vector<TokenSeq>& candidates,
      const std::vector<TokenSeq>& evidences) const override {
    return std::vector<double>(candidates.size() * evidences.size(), value_);
  }

 private:
  double value_;
};

// Single content token, EOS impossible: nothing can ever finish.
class NeverFinishes : public SequenceModel {
 public:
  int target_vocab_size() const override { return 1; }
  ModelState initial_state(const TokenSeq&) const override { return {}; }
  ModelState advance(const ModelState& state, Token) const override {
    ModelState next = state;
    next.length += 1;
    return next;
  }
  StepDistribution continuation(const TokenSeq&,
                                const ModelState&) const override {
    return {{0.0, -std::numeric_limits<double>::infinity()}};
  }
  int max_output_length(const TokenSeq&) const override { return 4; }
};

void check_same(const Hypothesis& got, const oracles::RefHypothesis& want) {
  CHECK(got.tokens == want.tokens);
  CHECK(got.sum_logprob == want.sum_logprob);
  CHECK(got.steps == want.steps);
  CHECK(got.id == want.id);
  CHECK(got.finished == want.finished);
}

}  // namespace

TEST_CASE("beam search matches the reference implementation") {
  std::mt19937_64 gen(41);
  for (int trial = 0; trial < 30; ++trial) {
    const ToyModel model = random_toy_model(gen, SynthScale{});
    const TokenSeq source = random_source(gen, model, 1, 5);
    const int beam = 1 + static_cast<int>(gen() % 5);

    const BeamResult got = beam_search(model, source, beam);
    const oracles::RefBeamOutcome want =
        oracles::reference_beam_search(model, source, beam);

    REQUIRE(got.finished.size() == want.finished.size());
    REQUIRE(got.discarded.size() == want.discarded.size());
    for (size_t i = 0; i < got.finished.size(); ++i) {
      check_same(got.finished[i], want.finished[i]);
    }
    for (size_t i = 0; i < got.discarded.size(); ++i) {
      check_same(got.discarded[i], want.discarded[i]);
    }
  }
}

TEST_CASE("beam results have the advertised shape") {
  std::mt19937_64 gen(42);
  const ToyModel model = random_toy_model(gen, SynthScale{});
  const TokenSeq source = random_source(gen, model, 2, 4);
  const BeamResult result = beam_search(model, source, 4);

  std::set<uint64_t> ids;
  for (const Hypothesis& h : result.finished) {
    CHECK(h.finished);
    CHECK(!h.tokens.empty());
    CHECK(ids.insert(h.id).second);
  }
  for (const Hypothesis& h : result.discarded) {
    CHECK_FALSE(h.finished);
    CHECK(!h.tokens.empty());
    CHECK(ids.insert(h.id).second);
  }
  CHECK(result.finished.size() <= 4);
  for (size_t i = 1; i < result.finished.size(); ++i) {
    CHECK(result.finished[i - 1].avg_logprob() >=
          result.finished[i].avg_logprob());
  }
}

TEST_CASE("a saturating beam finds the model argmax") {
  std::mt19937_64 gen(43);
  for (int trial = 0; trial < 8; ++trial) {
    const ToyModel model = random_toy_model(gen, SynthScale{});
    const TokenSeq source = random_source(gen, model, 1, 4);

    const BeamResult result = beam_search(model, source, 800);
    const auto all = oracles::enumerate_finished(model, source);
    REQUIRE(!all.empty());
    REQUIRE(!result.finished.empty());

    double best = -std::numeric_limits<double>::infinity();
    for (const auto& f : all) best = std::max(best, f.avg());
    CHECK(result.finished[0].avg_logprob() == best);
    CHECK(result.finished.size() == all.size());
  }
}

TEST_CASE("beam search rejects a non-positive beam") {
  std::mt19937_64 gen(44);
  const ToyModel model = random_toy_model(gen, SynthScale{});
  CHECK_THROWS_AS(beam_search(model, {1}, 0), InvalidInputError);
}

TEST_CASE("hypothesis scoring follows the length-discounted formula") {
  Hypothesis hyp;
  hyp.tokens = {3, 1, 4, 1};
  hyp.sum_logprob = -8.0;
  hyp.steps = 4;

  const EvidenceSpace space(std::vector<Evidence>{{{2, 7}, -1.0}});
  // avg -2, risk 0.5, t=1 of T=3: -2 - 1*0.5 - 0.1*2*4 = -3.3.
  CHECK(score_hypothesis(hyp, space, ConstantDelta(0.5), 1, 3, 1.0, 0.1) ==
        doctest::Approx(-3.3).epsilon(1e-12));
  // At t=T the length term vanishes.
  CHECK(score_hypothesis(hyp, space, ConstantDelta(0.5), 3, 3, 1.0, 0.1) ==
        doctest::Approx(-2.5).epsilon(1e-12));
  CHECK_THROWS_AS(score_hypothesis(hyp, space, ConstantDelta(0.5), 0, 3, 1.0,
                                   0.1),
                  InvalidInputError);
  CHECK_THROWS_AS(score_hypothesis(hyp, space, ConstantDelta(0.5), 4, 3, 1.0,
                                   0.1),
                  InvalidInputError);
}

TEST_CASE("later-stage decoding matches the reference interpreter") {
  std::mt19937_64 gen(45);
  const ExactBleuDiscrepancy delta;
  for (int trial = 0; trial < 25; ++trial) {
    const ToyModel model = random_toy_model(gen, SynthScale{});
    const TokenSeq source = random_source(gen, model, 1, 5);
    DecodeConfig config;
    config.beam_size = 2 + static_cast<int>(gen() % 2);

    const DecodeResult got =
        later_stage_mbr_decode(model, source, config, delta);
    const oracles::RefDecodeOutcome want =
        oracles::reference_later_stage(model, source, config);

    check_same(got.output, want.output);
    REQUIRE(got.evidence.size() == want.evidence.size());
    for (size_t i = 0; i < got.evidence.size(); ++i) {
      check_same(got.evidence[i], want.evidence[i]);
      CHECK(got.report.risks[i] == want.final_risks[i]);
    }
    CHECK(got.report.best() == want.best_index);
  }
}

TEST_CASE("zero extra steps reduce to reranking the beam output") {
  std::mt19937_64 gen(46);
  const ExactBleuDiscrepancy delta;
  const ToyModel model = random_toy_model(gen, SynthScale{});
  const TokenSeq source = random_source(gen, model, 2, 4);

  DecodeConfig config;
  config.beam_size = 3;
  config.extra_steps = 0;
  const DecodeResult result =
      later_stage_mbr_decode(model, source, config, delta);

  const BeamResult beam = beam_search(model, source, 3);
  std::vector<Evidence> evs;
  for (const Hypothesis& h : beam.finished) {
    evs.push_back(to_evidence(h, model.eos_id()));
  }
  const RiskReport report = mbr_rerank(evs, EvidenceSpace(evs), delta);
  CHECK(result.output.tokens == beam.finished[report.best()].tokens);
  CHECK(result.output.id == beam.finished[report.best()].id);
}

TEST_CASE("trace records every stage of a run") {
  std::mt19937_64 gen(47);
  const ExactBleuDiscrepancy delta;
  const ToyModel model = random_toy_model(gen, SynthScale{});
  const TokenSeq source = random_source(gen, model, 3, 5);
  DecodeConfig config;
  config.beam_size = 2;

  const DecodeResult result =
      later_stage_mbr_decode(model, source, config, delta);
  REQUIRE(!result.trace.empty());
  CHECK(result.trace.front().rfind("step=0 action=init ", 0) == 0);
  CHECK(result.trace.back().rfind("final action=output ", 0) == 0);
  int pops = 0;
  for (const std::string& line : result.trace) {
    if (line.find(" action=pop ") != std::string::npos) ++pops;
  }
  CHECK(pops > 0);
}

TEST_CASE("decoding with no reachable finish raises DecodeError") {
  const NeverFinishes model;
  DecodeConfig config;
  config.beam_size = 2;
  CHECK_THROWS_AS(
      later_stage_mbr_decode(model, {1}, config, ExactBleuDiscrepancy()),
      DecodeError);
}

TEST_CASE("config validation") {
  std::mt19937_64 gen(48);
  const ToyModel model = random_toy_model(gen, SynthScale{});
  const ExactBleuDiscrepancy delta;
  DecodeConfig config;

  config.beam_size = 0;
  CHECK_THROWS_AS(later_stage_mbr_decode(model, {1}, config, delta),
                  InvalidInputError);
  config.beam_size = 2;
  config.rerank_pool_factor = 0;
  CHECK_THROWS_AS(later_stage_mbr_decode(model, {1}, config, delta),
                  InvalidInputError);
  config.rerank_pool_factor = 3;
  config.alpha = -0.5;
  CHECK_THROWS_AS(later_stage_mbr_decode(model, {1}, config, delta),
                  InvalidInputError);
}

TEST_CASE("evidence view of an empty finished hypothesis is EOS") {
  Hypothesis hyp;
  hyp.sum_logprob = -0.7;
  hyp.steps = 1;
  hyp.finished = true;
  const Evidence e = to_evidence(hyp, 9);
  CHECK(e.seq == TokenSeq{9});
  CHECK(e.avg_logprob == -0.7);
}
