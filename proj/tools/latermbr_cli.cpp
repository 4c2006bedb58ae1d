#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "latermbr/bench.h"
#include "latermbr/candidate_io.h"
#include "latermbr/io_util.h"
#include "latermbr/model.h"
#include "latermbr/policy.h"
#include "latermbr/search.h"
#include "latermbr/synth.h"
#include "latermbr/tensor_io.h"

namespace {

using namespace latermbr;

constexpr int kFeatureDim = 5;

// "-" selects the standard stream.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path != "-") {
      file_.open(path);
      if (!file_) {
        throw ParseError("cannot open output file: " + path, 0);
      }
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<std::string> read_lines(const std::string& path) {
  std::vector<std::string> lines;
  std::string line;
  if (path == "-") {
    while (std::getline(std::cin, line)) lines.push_back(line);
    return lines;
  }
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open input file: " + path, 0);
  }
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_ws(const std::string& text) {
  std::istringstream iss(text);
  std::vector<std::string> tokens;
  std::string tok;
  while (iss >> tok) tokens.push_back(tok);
  return tokens;
}

// Runs fn(0..n-1) on `jobs` threads; per-index results keep input order.
template <typename Result>
std::vector<Result> map_ordered(size_t n, int jobs,
                                const std::function<Result(size_t)>& fn) {
  std::vector<Result> results(n);
  if (jobs <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) results[i] = fn(i);
    return results;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        results[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  const int count = std::min<int>(jobs, static_cast<int>(n));
  threads.reserve(count);
  for (int t = 0; t < count; ++t) threads.emplace_back(worker);
  for (std::thread& t : threads) t.join();
  if (error) std::rethrow_exception(error);
  return results;
}

TokenSeq source_ids(const ToyModel& model, const std::vector<std::string>& toks) {
  TokenSeq ids;
  ids.reserve(toks.size());
  for (const std::string& tok : toks) ids.push_back(model.source_id(tok));
  return ids;
}

std::vector<std::string> target_strings(const ToyModel& model,
                                        const TokenSeq& seq) {
  if (seq.empty()) return {"</s>"};
  std::vector<std::string> out;
  out.reserve(seq.size());
  for (Token tok : seq) {
    out.push_back(model.target_vocab()[static_cast<size_t>(tok)]);
  }
  return out;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t k = 0; k < tokens.size(); ++k) {
    if (k > 0) out += " ";
    out += tokens[k];
  }
  return out;
}

struct DecodeFlags {
  std::string model_path;
  std::string input = "-";
  std::string output = "-";
  std::string strategy = "later-mbr";
  std::string delta = "exact";
  std::string checkpoint;
  std::string policy_path;
  std::string trace_path;
  std::string nbest_path;
  DecodeConfig config;
  uint64_t seed = 1;
  int jobs = 1;
  bool verbose = false;
};

struct SentenceResult {
  std::string line;
  std::vector<std::string> trace;
  CandidateSet nbest;
};

std::unique_ptr<DiscrepancySource> make_delta(const std::string& kind,
                                              const std::string& checkpoint) {
  if (kind == "exact") {
    return std::make_unique<ExactBleuDiscrepancy>();
  }
  if (kind == "approx") {
    if (checkpoint.empty()) {
      throw InvalidInputError("--delta approx needs --checkpoint");
    }
    return std::make_unique<ApproxDiscrepancy>(
        load_approx_checkpoint(checkpoint));
  }
  throw InvalidInputError("unknown delta: " + kind);
}

int cmd_decode(const DecodeFlags& flags) {
  const ToyModel model = load_model(flags.model_path);
  const std::unique_ptr<DiscrepancySource> delta =
      make_delta(flags.delta, flags.checkpoint);
  std::unique_ptr<PolicyParams> policy;
  if (!flags.policy_path.empty()) {
    if (flags.strategy != "later-mbr") {
      throw InvalidInputError("--policy applies to --strategy later-mbr only");
    }
    policy = std::make_unique<PolicyParams>(
        load_policy_checkpoint(flags.policy_path));
  }
  const std::vector<std::string> lines = read_lines(flags.input);

  std::function<SentenceResult(size_t)> decode_one = [&](size_t i) {
    SentenceResult res;
    res.nbest.id = std::to_string(i + 1);
    const std::vector<std::string> toks = split_ws(lines[i]);
    if (toks.empty()) {
      throw ParseError("empty source line", i + 1);
    }
    const TokenSeq source = source_ids(model, toks);

    std::vector<Hypothesis> evidence;
    Hypothesis output;
    bool have_risk = false;
    double best_risk = 0.0;
    if (flags.strategy == "beam") {
      BeamResult beam =
          beam_search(model, source, flags.config.beam_size,
                      flags.config.max_length);
      if (beam.finished.empty()) {
        throw DecodeError("no finished hypothesis for line " +
                          std::to_string(i + 1));
      }
      output = beam.finished.front();
      evidence = std::move(beam.finished);
    } else if (flags.strategy == "mbr-rerank") {
      BeamResult beam =
          beam_search(model, source, flags.config.beam_size,
                      flags.config.max_length);
      if (beam.finished.empty()) {
        throw DecodeError("no finished hypothesis for line " +
                          std::to_string(i + 1));
      }
      std::vector<Evidence> evs;
      evs.reserve(beam.finished.size());
      for (const Hypothesis& h : beam.finished) {
        evs.push_back(to_evidence(h, model.eos_id()));
      }
      const EvidenceSpace space(evs);
      const RiskReport report = mbr_rerank(evs, space, *delta);
      output = beam.finished[static_cast<size_t>(report.best())];
      best_risk = report.risks[static_cast<size_t>(report.best())];
      have_risk = true;
      evidence = std::move(beam.finished);
    } else if (flags.strategy == "later-mbr") {
      DecodeConfig config = flags.config;
      if (policy) {
        BeamResult beam = beam_search(model, source, config.beam_size,
                                      config.max_length);
        const int limit = config.max_length > 0
                              ? config.max_length
                              : model.max_output_length(source);
        std::vector<double> avg_lps;
        avg_lps.reserve(beam.finished.size());
        for (const Hypothesis& h : beam.finished) {
          avg_lps.push_back(h.avg_logprob());
        }
        const Eigen::VectorXd s = decode_features(
            static_cast<int>(source.size()), limit, avg_lps,
            beam.discarded.size(), config.beam_size);
        std::mt19937_64 gen(flags.seed);
        const Eigen::VectorXd a = clamp_nonneg(
            act(*policy, s, ActMode::kDeterministic, gen));
        config.alpha = a[0];
        config.beta = a[1];
      }
      DecodeResult dec = later_stage_mbr_decode(model, source, config, *delta);
      output = std::move(dec.output);
      best_risk = dec.report.risks[static_cast<size_t>(dec.report.best())];
      have_risk = true;
      evidence = std::move(dec.evidence);
      res.trace = std::move(dec.trace);
    } else {
      throw InvalidInputError("unknown strategy: " + flags.strategy);
    }

    res.line = join(target_strings(model, output.tokens));
    if (flags.verbose) {
      res.line += "\tavg_logprob=" + fmt_double(output.avg_logprob());
      if (have_risk) {
        res.line += "\trisk=" + fmt_double(best_risk);
      }
    }
    for (const Hypothesis& h : evidence) {
      res.nbest.entries.push_back(CandidateEntry{
          target_strings(model, h.tokens), h.avg_logprob()});
    }
    return res;
  };

  const std::vector<SentenceResult> results =
      map_ordered<SentenceResult>(lines.size(), flags.jobs, decode_one);

  Sink out(flags.output);
  for (const SentenceResult& res : results) {
    out.stream() << res.line << "\n";
  }
  if (!flags.nbest_path.empty()) {
    Sink nbest(flags.nbest_path);
    std::vector<CandidateSet> sets;
    sets.reserve(results.size());
    for (const SentenceResult& res : results) sets.push_back(res.nbest);
    write_candidates(nbest.stream(), sets);
  }
  if (!flags.trace_path.empty()) {
    Sink trace(flags.trace_path);
    for (size_t i = 0; i < results.size(); ++i) {
      for (const std::string& line : results[i].trace) {
        trace.stream() << i + 1 << "\t" << line << "\n";
      }
    }
  }
  return 0;
}

struct RerankFlags {
  std::string input;
  std::string output = "-";
  std::string delta = "exact";
  std::string checkpoint;
  bool cross_check = false;
  int jobs = 1;
};

int cmd_rerank(const RerankFlags& flags) {
  const std::vector<CandidateSet> sets = read_candidate_file(flags.input);
  const std::unique_ptr<DiscrepancySource> delta =
      make_delta(flags.delta == "exact-naive" ? "exact" : flags.delta,
                 flags.checkpoint);
  const ExactBleuDiscrepancy exact;

  struct Row {
    std::string text;
    bool agree = true;
  };
  std::function<Row(size_t)> rerank_one = [&](size_t i) {
    const CandidateSet& set = sets[i];
    const std::vector<Evidence> evs = to_evidence(set);
    const EvidenceSpace space(evs);
    RiskReport report;
    if (flags.delta == "exact-naive") {
      report = naive_rerank_early_stop(evs, space, *delta);
    } else {
      report = mbr_rerank(evs, space, *delta);
    }

    Row row;
    if (flags.cross_check || flags.delta == "approx") {
      // Reference rank-1 under the exact kernel; for --cross-check the
      // comparison partner is the other exact variant.
      RiskReport ref;
      if (flags.cross_check && flags.delta != "exact-naive") {
        ref = naive_rerank_early_stop(evs, space, exact);
      } else {
        ref = mbr_rerank(evs, space, exact);
      }
      row.agree = ref.best() == report.best();
    }
    std::ostringstream text;
    write_ranked(text, set, report);
    row.text = text.str();
    return row;
  };

  const std::vector<Row> rows =
      map_ordered<Row>(sets.size(), flags.jobs, rerank_one);

  Sink out(flags.output);
  size_t agree = 0;
  for (const Row& row : rows) {
    out.stream() << row.text;
    if (row.agree) ++agree;
  }

  if (flags.cross_check) {
    std::cerr << "cross-check: " << agree << "/" << rows.size()
              << " sentences with matching rank-1\n";
    if (agree != rows.size()) {
      throw DecodeError("cross-check found rank-1 disagreement");
    }
  } else if (flags.delta == "approx") {
    std::ostringstream pct;
    pct << (rows.empty() ? 0.0
                         : 100.0 * static_cast<double>(agree) /
                               static_cast<double>(rows.size()));
    std::cerr << "approx rank-1 agreement vs exact: " << agree << "/"
              << rows.size() << " (" << pct.str() << "%)\n";
  }
  return 0;
}

struct BenchFlags {
  BenchOptions options;
  std::string output = "-";
};

int cmd_bench(const BenchFlags& flags) {
  const std::vector<BenchRow> rows = run_bench(flags.options);
  Sink out(flags.output);
  write_bench_csv(out.stream(), rows);
  return 0;
}

struct TrainApproxFlags {
  std::string pairs_path;
  std::string candidates_path;
  std::string checkpoint;
  std::string log_path;
  ApproxTrainOptions options;
  int vocab = 256;
};

std::vector<ApproxExample> read_pair_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open pair file: " + path, 0);
  }
  std::vector<ApproxExample> examples;
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
      throw ParseError("pair line needs target and two sequences", line_no);
    }
    ApproxExample ex;
    std::istringstream target(line.substr(0, tab1));
    if (!(target >> ex.target)) {
      throw ParseError("bad target", line_no);
    }
    auto parse_ids = [&](const std::string& text) {
      std::istringstream iss(text);
      TokenSeq seq;
      Token tok;
      while (iss >> tok) seq.push_back(tok);
      if (seq.empty()) {
        throw ParseError("empty sequence in pair file", line_no);
      }
      return seq;
    };
    ex.a = parse_ids(line.substr(tab1 + 1, tab2 - tab1 - 1));
    ex.b = parse_ids(line.substr(tab2 + 1));
    examples.push_back(std::move(ex));
  }
  return examples;
}

// All ordered within-sentence pairs, targets scaled exact discrepancies over
// per-sentence local ids.
std::vector<ApproxExample> pairs_from_candidates(const std::string& path) {
  std::vector<ApproxExample> examples;
  for (const CandidateSet& set : read_candidate_file(path)) {
    const std::vector<Evidence> evs = to_evidence(set);
    for (size_t i = 0; i < evs.size(); ++i) {
      for (size_t j = 0; j < evs.size(); ++j) {
        if (i == j) continue;
        examples.push_back(ApproxExample{
            evs[i].seq, evs[j].seq,
            kApproxTargetScale *
                (1.0 - smoothed_bleu(evs[i].seq, evs[j].seq))});
      }
    }
  }
  return examples;
}

int cmd_train_approx(const TrainApproxFlags& flags) {
  if (flags.pairs_path.empty() == flags.candidates_path.empty()) {
    throw InvalidInputError("need exactly one of --pairs and --candidates");
  }
  const std::vector<ApproxExample> examples =
      flags.pairs_path.empty() ? pairs_from_candidates(flags.candidates_path)
                               : read_pair_file(flags.pairs_path);
  for (const ApproxExample& ex : examples) {
    for (const TokenSeq* seq : {&ex.a, &ex.b}) {
      for (Token tok : *seq) {
        if (tok < 0 || tok >= flags.vocab) {
          throw InvalidInputError("training id outside --vocab range");
        }
      }
    }
  }

  const ApproxTrainResult result =
      train_approximator(examples, flags.vocab, flags.options);
  save_approx_checkpoint(flags.checkpoint, result.params);

  if (!flags.log_path.empty()) {
    Sink log(flags.log_path);
    log.stream() << "epoch,mse\n";
    log.stream() << "0," << fmt_double(result.initial_mse) << "\n";
    for (size_t e = 0; e < result.epoch_loss.size(); ++e) {
      log.stream() << e + 1 << "," << fmt_double(result.epoch_loss[e]) << "\n";
    }
  }
  std::cerr << "trained on " << examples.size() << " pairs, mse "
            << fmt_double(result.initial_mse) << " -> "
            << fmt_double(result.final_mse) << "\n";
  return 0;
}

struct TrainPolicyFlags {
  bool bandit = false;
  std::string model_path;
  std::string corpus_path;
  std::string checkpoint;
  std::string log_path;
  int updates = 500;
  int batch = 32;
  double learning_rate = 0.01;
  int beam_size = 5;
  int extra_steps = -1;
  uint64_t seed = 1;
};

int cmd_train_policy(const TrainPolicyFlags& flags) {
  if (!flags.bandit && (flags.model_path.empty() || flags.corpus_path.empty())) {
    throw InvalidInputError(
        "train-policy needs --bandit or both --model and --corpus");
  }
  PolicyParams params = PolicyParams::init(kFeatureDim, flags.seed);
  std::mt19937_64 gen(flags.seed + 1);

  std::unique_ptr<ToyModel> model;
  std::vector<SentencePair> corpus;
  if (!flags.bandit) {
    model = std::make_unique<ToyModel>(load_model(flags.model_path));
    corpus = read_parallel_corpus(flags.corpus_path);
    if (corpus.empty()) {
      throw InvalidInputError("empty training corpus");
    }
  }
  const ExactBleuDiscrepancy exact;
  const Eigen::VectorXd bandit_s = Eigen::VectorXd::Constant(kFeatureDim, 0.5);

  Sink log(flags.log_path.empty() ? "-" : flags.log_path);
  std::ostream* log_stream = flags.log_path.empty() ? nullptr : &log.stream();
  if (log_stream) *log_stream << "update,mean_reward,baseline_mse\n";

  double first_reward = 0.0;
  double last_reward = 0.0;
  size_t corpus_pos = 0;
  for (int update = 1; update <= flags.updates; ++update) {
    std::vector<Episode> episodes;
    episodes.reserve(flags.batch);
    for (int k = 0; k < flags.batch; ++k) {
      Episode ep;
      if (flags.bandit) {
        ep.s = bandit_s;
        ep.a = act(params, ep.s, ActMode::kSample, gen);
        const double d1 = ep.a[0] - 2.0;
        const double d2 = ep.a[1] - 0.5;
        ep.reward = -d1 * d1 - d2 * d2;
      } else {
        const SentencePair& pair = corpus[corpus_pos];
        corpus_pos = (corpus_pos + 1) % corpus.size();
        TokenSeq source;
        for (const std::string& tok : pair.source) {
          source.push_back(model->source_id(tok));
        }
        TokenSeq reference;
        for (const std::string& tok : pair.target) {
          reference.push_back(model->target_id(tok));
        }

        DecodeConfig config;
        config.beam_size = flags.beam_size;
        config.extra_steps = flags.extra_steps;
        const BeamResult beam =
            beam_search(*model, source, config.beam_size, 0);
        std::vector<double> avg_lps;
        for (const Hypothesis& h : beam.finished) {
          avg_lps.push_back(h.avg_logprob());
        }
        ep.s = decode_features(static_cast<int>(source.size()),
                               model->max_output_length(source), avg_lps,
                               beam.discarded.size(), config.beam_size);
        ep.a = act(params, ep.s, ActMode::kSample, gen);
        const Eigen::VectorXd weights = clamp_nonneg(ep.a);
        config.alpha = weights[0];
        config.beta = weights[1];
        const DecodeResult dec =
            later_stage_mbr_decode(*model, source, config, exact);
        ep.reward = dec.output.tokens.empty()
                        ? 0.0
                        : smoothed_bleu(dec.output.tokens, reference);
      }
      episodes.push_back(std::move(ep));
    }
    const PolicyUpdateStats stats =
        reinforce_update(params, episodes, flags.learning_rate);
    if (update == 1) first_reward = stats.mean_reward;
    last_reward = stats.mean_reward;
    if (log_stream) {
      *log_stream << update << "," << fmt_double(stats.mean_reward) << ","
                  << fmt_double(stats.baseline_mse) << "\n";
    }
  }

  if (!flags.checkpoint.empty()) {
    save_policy_checkpoint(flags.checkpoint, params);
  }
  std::cerr << "mean reward " << fmt_double(first_reward) << " -> "
            << fmt_double(last_reward) << " over " << flags.updates
            << " updates\n";
  return 0;
}

struct EstimateFlags {
  std::string corpus_path;
  std::string output;
  int lm_order = 2;
  double add_k = 0.5;
  double lambda = 0.7;
};

int cmd_estimate_model(const EstimateFlags& flags) {
  const std::vector<SentencePair> corpus =
      read_parallel_corpus(flags.corpus_path);
  const ToyModel model =
      estimate_toy_model(corpus, flags.lm_order, flags.add_k, flags.lambda);
  save_model(model, flags.output);
  std::cerr << "estimated model: " << model.source_vocab_size()
            << " source tokens, " << model.target_vocab_size()
            << " target tokens\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"later-stage MBR decoding toolkit"};
  app.require_subcommand(1);

  DecodeFlags decode;
  CLI::App* dec = app.add_subcommand("decode", "decode source sentences");
  dec->add_option("--model", decode.model_path, "toy model file")->required();
  dec->add_option("--input", decode.input, "source sentences, - for stdin");
  dec->add_option("--output", decode.output, "output file, - for stdout");
  dec->add_option("--strategy", decode.strategy,
                  "beam | mbr-rerank | later-mbr");
  dec->add_option("--beam-size", decode.config.beam_size, "beam width B");
  dec->add_option("--extra-steps", decode.config.extra_steps,
                  "extra MBR steps T, negative = source length");
  dec->add_option("--alpha", decode.config.alpha, "risk weight");
  dec->add_option("--beta", decode.config.beta, "length penalty weight");
  dec->add_option("--pool-factor", decode.config.rerank_pool_factor,
                  "score only the top pool-factor*B of H");
  dec->add_option("--max-length", decode.config.max_length,
                  "output length cap, 0 = model default");
  dec->add_option("--delta", decode.delta, "exact | approx");
  dec->add_option("--checkpoint", decode.checkpoint,
                  "approximator checkpoint for --delta approx");
  dec->add_option("--policy", decode.policy_path,
                  "policy checkpoint that picks alpha/beta per sentence");
  dec->add_option("--trace", decode.trace_path, "write decoder trace here");
  dec->add_option("--nbest", decode.nbest_path,
                  "write final evidence as a candidate file");
  dec->add_option("--seed", decode.seed, "random seed");
  dec->add_option("--jobs", decode.jobs, "worker threads");
  dec->add_flag("--verbose", decode.verbose, "append scores to output lines");

  RerankFlags rerank;
  CLI::App* rer = app.add_subcommand("rerank", "rerank a candidate file");
  rer->add_option("--input", rerank.input, "candidate file")->required();
  rer->add_option("--output", rerank.output, "ranked output, - for stdout");
  rer->add_option("--delta", rerank.delta, "exact | exact-naive | approx");
  rer->add_option("--checkpoint", rerank.checkpoint,
                  "approximator checkpoint for --delta approx");
  rer->add_flag("--cross-check", rerank.cross_check,
                "verify rank-1 agreement of both exact rerankers");
  rer->add_option("--jobs", rerank.jobs, "worker threads");

  BenchFlags bench;
  CLI::App* ben = app.add_subcommand("bench", "time reranking methods");
  ben->add_option("--sizes", bench.options.sizes, "candidate counts")
      ->delimiter(',');
  ben->add_option("--methods", bench.options.methods,
                  "naive | batch | approx")
      ->delimiter(',');
  ben->add_option("--reps", bench.options.repetitions, "repetitions per cell");
  ben->add_option("--seed", bench.options.seed, "random seed");
  ben->add_option("--vocab", bench.options.vocab, "synthetic vocabulary size");
  ben->add_option("--output", bench.output, "CSV output, - for stdout");

  TrainApproxFlags train_approx;
  CLI::App* ta = app.add_subcommand("train-approx",
                                    "train the discrepancy approximator");
  ta->add_option("--pairs", train_approx.pairs_path,
                 "pair file: target\\tids\\tids");
  ta->add_option("--candidates", train_approx.candidates_path,
                 "candidate file to build pairs from");
  ta->add_option("--checkpoint", train_approx.checkpoint, "output checkpoint")
      ->required();
  ta->add_option("--log", train_approx.log_path, "epoch loss CSV");
  ta->add_option("--epochs", train_approx.options.epochs, "training epochs");
  ta->add_option("--lr", train_approx.options.learning_rate, "learning rate");
  ta->add_option("--batch-size", train_approx.options.batch_size,
                 "minibatch size");
  ta->add_option("--hidden", train_approx.options.hidden, "hidden units");
  ta->add_option("--vocab", train_approx.vocab, "local vocabulary capacity");
  ta->add_option("--seed", train_approx.options.seed, "random seed");

  TrainPolicyFlags train_policy;
  CLI::App* tp = app.add_subcommand("train-policy",
                                    "REINFORCE training of the weight policy");
  tp->add_flag("--bandit", train_policy.bandit,
               "synthetic bandit task instead of corpus decoding");
  tp->add_option("--model", train_policy.model_path, "toy model file");
  tp->add_option("--corpus", train_policy.corpus_path,
                 "tab-separated parallel corpus");
  tp->add_option("--checkpoint", train_policy.checkpoint, "output checkpoint");
  tp->add_option("--log", train_policy.log_path, "training log CSV");
  tp->add_option("--updates", train_policy.updates, "parameter updates");
  tp->add_option("--batch", train_policy.batch, "episodes per update");
  tp->add_option("--lr", train_policy.learning_rate, "learning rate");
  tp->add_option("--beam-size", train_policy.beam_size, "beam width B");
  tp->add_option("--extra-steps", train_policy.extra_steps,
                 "extra MBR steps T, negative = source length");
  tp->add_option("--seed", train_policy.seed, "random seed");

  EstimateFlags estimate;
  CLI::App* est = app.add_subcommand("estimate-model",
                                     "estimate a toy model from a corpus");
  est->add_option("--corpus", estimate.corpus_path, "parallel corpus")
      ->required();
  est->add_option("--output", estimate.output, "model file")->required();
  est->add_option("--lm-order", estimate.lm_order, "LM n-gram order");
  est->add_option("--add-k", estimate.add_k, "LM add-k smoothing");
  est->add_option("--lambda", estimate.lambda, "lexical/LM mixture weight");

  try {
    app.parse(argc, argv);
    if (dec->parsed()) return cmd_decode(decode);
    if (rer->parsed()) return cmd_rerank(rerank);
    if (ben->parsed()) return cmd_bench(bench);
    if (ta->parsed()) return cmd_train_approx(train_approx);
    if (tp->parsed()) return cmd_train_policy(train_policy);
    if (est->parsed()) return cmd_estimate_model(estimate);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
