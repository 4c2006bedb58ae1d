#include "latermbr/model.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "latermbr/io_util.h"

namespace latermbr {

std::pair<StepDistribution, ModelState> step(const SequenceModel& model,
                                             const TokenSeq& source,
                                             const ModelState& state,
                                             Token last_token) {
  ModelState next_state =
      last_token == kBosToken ? state : model.advance(state, last_token);
  StepDistribution dist = model.continuation(source, next_state);
  return {std::move(dist), std::move(next_state)};
}

ToyModel::ToyModel(std::vector<std::string> source_vocab,
                   std::vector<std::string> target_vocab,
                   std::vector<double> lexical,
                   std::map<TokenSeq, int64_t> lm_counts, int lm_order,
                   double add_k, double lambda, double eos_prob,
                   int hard_max_len)
    : source_vocab_(std::move(source_vocab)),
      target_vocab_(std::move(target_vocab)),
      lexical_(std::move(lexical)),
      lm_counts_(std::move(lm_counts)),
      lm_order_(lm_order),
      add_k_(add_k),
      lambda_(lambda),
      eos_prob_(eos_prob),
      hard_max_len_(hard_max_len) {
  if (source_vocab_.empty() || target_vocab_.empty()) {
    throw InvalidInputError("ToyModel: empty vocabulary");
  }
  if (lm_order_ < 1 || lm_order_ > 3) {
    throw InvalidInputError("ToyModel: lm_order must be in 1..3");
  }
  if (add_k_ <= 0.0) {
    throw InvalidInputError("ToyModel: add_k must be positive");
  }
  if (lambda_ < 0.0 || lambda_ > 1.0) {
    throw InvalidInputError("ToyModel: lambda must be in [0,1]");
  }
  if (eos_prob_ < 0.0 || eos_prob_ >= 1.0) {
    throw InvalidInputError("ToyModel: eos_prob must be in [0,1)");
  }
  if (lexical_.size() != source_vocab_.size() * target_vocab_.size()) {
    throw InvalidInputError("ToyModel: lexical table shape mismatch");
  }
  for (size_t s = 0; s < source_vocab_.size(); ++s) {
    double row_sum = 0.0;
    for (size_t t = 0; t < target_vocab_.size(); ++t) {
      const double p = lexical_[s * target_vocab_.size() + t];
      if (p < 0.0) throw InvalidInputError("ToyModel: negative lexical entry");
      row_sum += p;
    }
    if (std::abs(row_sum - 1.0) > 1e-9) {
      throw InvalidInputError("ToyModel: lexical row does not normalize");
    }
  }
  for (const auto& [gram, count] : lm_counts_) {
    if (gram.empty() || gram.size() > static_cast<size_t>(lm_order_)) {
      throw InvalidInputError("ToyModel: lm n-gram length out of range");
    }
    if (count < 0) throw InvalidInputError("ToyModel: negative lm count");
    if (gram.size() >= 2) {
      TokenSeq history(gram.begin(), gram.end() - 1);
      lm_context_totals_[history] += count;
    } else {
      lm_context_totals_[TokenSeq{}] += count;
    }
  }
  for (size_t i = 0; i < source_vocab_.size(); ++i) {
    source_ids_.emplace(source_vocab_[i], static_cast<Token>(i));
  }
  for (size_t i = 0; i < target_vocab_.size(); ++i) {
    target_ids_.emplace(target_vocab_[i], static_cast<Token>(i));
  }
}

Token ToyModel::source_id(const std::string& token) const {
  auto it = source_ids_.find(token);
  return it == source_ids_.end() ? kUnkId : it->second;
}

Token ToyModel::target_id(const std::string& token) const {
  auto it = target_ids_.find(token);
  return it == target_ids_.end() ? kUnkId : it->second;
}

int ToyModel::max_output_length(const TokenSeq& source) const {
  return hard_max_len_ > 0 ? hard_max_len_
                           : SequenceModel::max_output_length(source);
}

ModelState ToyModel::initial_state(const TokenSeq&) const { return {}; }

ModelState ToyModel::advance(const ModelState& state, Token token) const {
  if (token < 0 || token >= target_vocab_size()) {
    throw InvalidInputError("ToyModel: token out of vocabulary");
  }
  ModelState next = state;
  next.recent.push_back(token);
  const size_t window = static_cast<size_t>(lm_order_ - 1);
  if (next.recent.size() > window) {
    next.recent.erase(next.recent.begin(),
                      next.recent.end() - static_cast<ptrdiff_t>(window));
  }
  ++next.length;
  return next;
}

double ToyModel::lm_continuation(const TokenSeq& history, Token token) const {
  TokenSeq gram = history;
  gram.push_back(token);
  int64_t count = 0;
  if (auto it = lm_counts_.find(gram); it != lm_counts_.end()) {
    count = it->second;
  }
  int64_t total = 0;
  if (auto it = lm_context_totals_.find(history);
      it != lm_context_totals_.end()) {
    total = it->second;
  }
  const double v = static_cast<double>(target_vocab_size());
  return (static_cast<double>(count) + add_k_) /
         (static_cast<double>(total) + add_k_ * v);
}

StepDistribution ToyModel::continuation(const TokenSeq& source,
                                        const ModelState& state) const {
  if (source.empty()) {
    throw InvalidInputError("ToyModel: empty source");
  }
  for (Token s : source) {
    if (s < 0 || s >= source_vocab_size()) {
      throw InvalidInputError("ToyModel: source token out of vocabulary");
    }
  }
  const int v = target_vocab_size();
  const int position = state.length + 1;
  double eos;
  if (position >= max_output_length(source)) {
    eos = 1.0;
  } else if (position == 1) {
    eos = 0.0;
  } else {
    eos = eos_prob_;
  }

  StepDistribution dist;
  dist.log_probs.assign(static_cast<size_t>(v) + 1, 0.0);
  if (eos < 1.0) {
    for (int w = 0; w < v; ++w) {
      double lex = 0.0;
      for (Token s : source) {
        lex += lexical(s, w);
      }
      lex /= static_cast<double>(source.size());
      const double lm = lm_continuation(state.recent, static_cast<Token>(w));
      const double p = (1.0 - eos) * (lambda_ * lex + (1.0 - lambda_) * lm);
      dist.log_probs[w] = std::log(p);
    }
  } else {
    for (int w = 0; w < v; ++w) {
      dist.log_probs[w] = -std::numeric_limits<double>::infinity();
    }
  }
  dist.log_probs[v] = eos > 0.0 ? std::log(eos)
                                : -std::numeric_limits<double>::infinity();
  return dist;
}

bool ToyModel::operator==(const ToyModel& other) const {
  return source_vocab_ == other.source_vocab_ &&
         target_vocab_ == other.target_vocab_ && lexical_ == other.lexical_ &&
         lm_counts_ == other.lm_counts_ && lm_order_ == other.lm_order_ &&
         add_k_ == other.add_k_ && lambda_ == other.lambda_ &&
         eos_prob_ == other.eos_prob_ && hard_max_len_ == other.hard_max_len_;
}

std::vector<SentencePair> read_parallel_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open corpus file: " + path, 0);
  }
  std::vector<SentencePair> corpus;
  std::string line;
  size_t line_no = 0;
  auto split = [](const std::string& text) {
    std::vector<std::string> tokens;
    std::istringstream iss(text);
    std::string tok;
    while (iss >> tok) tokens.push_back(tok);
    return tokens;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError("corpus line missing tab separator", line_no);
    }
    SentencePair pair;
    pair.source = split(line.substr(0, tab));
    pair.target = split(line.substr(tab + 1));
    if (pair.source.empty() || pair.target.empty()) {
      throw ParseError("corpus line with empty side", line_no);
    }
    corpus.push_back(std::move(pair));
  }
  return corpus;
}

ToyModel estimate_toy_model(const std::vector<SentencePair>& corpus,
                            int lm_order, double add_k, double lambda) {
  if (corpus.empty()) {
    throw InvalidInputError("estimate_toy_model: empty corpus");
  }
  // First-occurrence vocabularies; id 0 is reserved for <unk> on both sides.
  std::vector<std::string> src_vocab{ToyModel::kUnkToken};
  std::vector<std::string> tgt_vocab{ToyModel::kUnkToken};
  std::unordered_map<std::string, Token> src_ids{{ToyModel::kUnkToken, 0}};
  std::unordered_map<std::string, Token> tgt_ids{{ToyModel::kUnkToken, 0}};
  auto intern = [](const std::string& tok, std::vector<std::string>& vocab,
                   std::unordered_map<std::string, Token>& ids) {
    auto [it, inserted] = ids.emplace(tok, static_cast<Token>(vocab.size()));
    if (inserted) vocab.push_back(tok);
    return it->second;
  };

  std::map<std::pair<Token, Token>, int64_t> cooc;
  std::map<TokenSeq, int64_t> lm_counts;
  int64_t total_target_tokens = 0;
  for (const SentencePair& pair : corpus) {
    std::vector<Token> src, tgt;
    for (const auto& tok : pair.source) src.push_back(intern(tok, src_vocab, src_ids));
    for (const auto& tok : pair.target) tgt.push_back(intern(tok, tgt_vocab, tgt_ids));
    for (Token s : src) {
      for (Token t : tgt) {
        ++cooc[{s, t}];
      }
    }
    total_target_tokens += static_cast<int64_t>(tgt.size());
    for (int n = 1; n <= lm_order; ++n) {
      for (size_t pos = 0; pos + n <= tgt.size(); ++pos) {
        TokenSeq gram(tgt.begin() + static_cast<ptrdiff_t>(pos),
                      tgt.begin() + static_cast<ptrdiff_t>(pos + n));
        ++lm_counts[gram];
      }
    }
  }

  const size_t vs = src_vocab.size();
  const size_t vt = tgt_vocab.size();
  std::vector<double> lexical(vs * vt, 0.0);
  for (const auto& [st, count] : cooc) {
    lexical[static_cast<size_t>(st.first) * vt + st.second] =
        static_cast<double>(count);
  }
  for (size_t s = 0; s < vs; ++s) {
    double row_sum = 0.0;
    for (size_t t = 0; t < vt; ++t) row_sum += lexical[s * vt + t];
    if (row_sum > 0.0) {
      for (size_t t = 0; t < vt; ++t) lexical[s * vt + t] /= row_sum;
    } else {
      // Never-observed source token (e.g. <unk>): uniform row.
      for (size_t t = 0; t < vt; ++t) lexical[s * vt + t] = 1.0 / static_cast<double>(vt);
    }
  }

  // Geometric hazard: one stop event per sentence over total_target_tokens
  // continue-or-stop trials.
  const double eos_prob = std::min(
      static_cast<double>(corpus.size()) / static_cast<double>(total_target_tokens),
      0.9);

  return ToyModel(std::move(src_vocab), std::move(tgt_vocab),
                  std::move(lexical), std::move(lm_counts), lm_order, add_k,
                  lambda, eos_prob);
}

void save_model(const ToyModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw ParseError("cannot open model file for writing: " + path, 0);
  }
  out << "toy-model v1\n";
  out << "lambda " << fmt_double(model.lambda()) << "\n";
  out << "eos-prob " << fmt_double(model.eos_prob()) << "\n";
  out << "add-k " << fmt_double(model.add_k()) << "\n";
  out << "hard-max-len " << model.hard_max_len() << "\n";
  out << "source-vocab " << model.source_vocab().size() << "\n";
  for (const auto& tok : model.source_vocab()) out << tok << "\n";
  out << "target-vocab " << model.target_vocab().size() << "\n";
  for (const auto& tok : model.target_vocab()) out << tok << "\n";
  out << "lexical " << model.source_vocab().size() << " "
      << model.target_vocab().size() << "\n";
  for (size_t s = 0; s < model.source_vocab().size(); ++s) {
    for (size_t t = 0; t < model.target_vocab().size(); ++t) {
      if (t) out << " ";
      out << fmt_double(model.lexical(static_cast<Token>(s), static_cast<Token>(t)));
    }
    out << "\n";
  }
  // ARPA-like n-gram sections, one "count<TAB>token ids" entry per line.
  // Counts rather than log probabilities so add-k conditionals and the
  // round-trip are exact.
  std::array<std::vector<const std::pair<const TokenSeq, int64_t>*>, 3> by_order;
  for (const auto& entry : model.lm_counts()) {
    by_order[entry.first.size() - 1].push_back(&entry);
  }
  out << "lm order=" << model.lm_order() << "\n";
  for (int n = 1; n <= model.lm_order(); ++n) {
    out << "\\" << n << "-grams: " << by_order[n - 1].size() << "\n";
    for (const auto* entry : by_order[n - 1]) {
      out << entry->second << "\t";
      for (size_t i = 0; i < entry->first.size(); ++i) {
        if (i) out << " ";
        out << entry->first[i];
      }
      out << "\n";
    }
  }
  out << "end\n";
  if (!out) {
    throw ParseError("failed writing model file: " + path, 0);
  }
}

namespace {

class LineReader {
 public:
  explicit LineReader(const std::string& path) : in_(path), path_(path) {
    if (!in_) throw ParseError("cannot open model file: " + path, 0);
  }
  std::string next() {
    std::string line;
    if (!std::getline(in_, line)) {
      throw ParseError("unexpected end of file in " + path_, line_no_);
    }
    ++line_no_;
    return line;
  }
  size_t line_no() const { return line_no_; }

 private:
  std::ifstream in_;
  std::string path_;
  size_t line_no_ = 0;
};

}  // namespace

ToyModel load_model(const std::string& path) {
  LineReader reader(path);
  auto expect_kv = [&](const std::string& key) {
    const std::string line = reader.next();
    if (line.rfind(key + " ", 0) != 0) {
      throw ParseError("expected '" + key + "' entry", reader.line_no());
    }
    return line.substr(key.size() + 1);
  };

  if (reader.next() != "toy-model v1") {
    throw ParseError("bad model header", 1);
  }
  const double lambda = std::stod(expect_kv("lambda"));
  const double eos_prob = std::stod(expect_kv("eos-prob"));
  const double add_k = std::stod(expect_kv("add-k"));
  const int hard_max_len = std::stoi(expect_kv("hard-max-len"));

  auto read_vocab = [&](const std::string& key) {
    const size_t n = std::stoul(expect_kv(key));
    std::vector<std::string> vocab;
    vocab.reserve(n);
    for (size_t i = 0; i < n; ++i) vocab.push_back(reader.next());
    return vocab;
  };
  std::vector<std::string> src_vocab = read_vocab("source-vocab");
  std::vector<std::string> tgt_vocab = read_vocab("target-vocab");

  std::istringstream lex_header(expect_kv("lexical"));
  size_t rows = 0, cols = 0;
  lex_header >> rows >> cols;
  if (rows != src_vocab.size() || cols != tgt_vocab.size()) {
    throw ParseError("lexical table shape mismatch", reader.line_no());
  }
  std::vector<double> lexical;
  lexical.reserve(rows * cols);
  for (size_t r = 0; r < rows; ++r) {
    std::istringstream row(reader.next());
    for (size_t c = 0; c < cols; ++c) {
      double v;
      if (!(row >> v)) {
        throw ParseError("short lexical row", reader.line_no());
      }
      lexical.push_back(v);
    }
  }

  const std::string lm_header = reader.next();
  if (lm_header.rfind("lm order=", 0) != 0) {
    throw ParseError("expected 'lm order=' section", reader.line_no());
  }
  const int lm_order = std::stoi(lm_header.substr(9));
  std::map<TokenSeq, int64_t> lm_counts;
  for (int n = 1; n <= lm_order; ++n) {
    std::string section = reader.next();
    std::ostringstream expected;
    expected << "\\" << n << "-grams: ";
    if (section.rfind(expected.str(), 0) != 0) {
      throw ParseError("expected n-gram section header", reader.line_no());
    }
    const size_t entries = std::stoul(section.substr(expected.str().size()));
    for (size_t e = 0; e < entries; ++e) {
      const std::string line = reader.next();
      const size_t tab = line.find('\t');
      if (tab == std::string::npos) {
        throw ParseError("n-gram entry missing tab", reader.line_no());
      }
      const int64_t count = std::stoll(line.substr(0, tab));
      TokenSeq gram;
      std::istringstream toks(line.substr(tab + 1));
      Token t;
      while (toks >> t) gram.push_back(t);
      if (gram.size() != static_cast<size_t>(n)) {
        throw ParseError("n-gram entry with wrong length", reader.line_no());
      }
      lm_counts.emplace(std::move(gram), count);
    }
  }
  if (reader.next() != "end") {
    throw ParseError("missing 'end' marker", reader.line_no());
  }
  try {
    return ToyModel(std::move(src_vocab), std::move(tgt_vocab),
                    std::move(lexical), std::move(lm_counts), lm_order, add_k,
                    lambda, eos_prob, hard_max_len);
  } catch (const InvalidInputError& e) {
    throw ParseError(std::string("invalid model: ") + e.what(), reader.line_no());
  }
}

}  // namespace latermbr
