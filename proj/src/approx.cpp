#include "latermbr/approx.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>

namespace latermbr {

namespace {

// Uniform double in [0, 1) built directly from the engine's bits so draws do
// not depend on the standard library's distribution internals.
double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * (1.0 / 9007199254740992.0);
}

void check_dims(int vocab, int hidden) {
  if (vocab < 1 || vocab > kMaxLocalVocab) {
    throw InvalidInputError("ApproxParams: vocab must be in [1, " +
                            std::to_string(kMaxLocalVocab) + "]");
  }
  if (hidden < 1) {
    throw InvalidInputError("ApproxParams: hidden must be >= 1");
  }
}

Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& x) {
  return 1.0 / (1.0 + (-x).exp());
}

}  // namespace

ApproxParams ApproxParams::zeros(int vocab, int hidden) {
  check_dims(vocab, hidden);
  ApproxParams p;
  p.vocab = vocab;
  p.hidden = hidden;
  p.w_x = Eigen::MatrixXd::Zero(4 * hidden, vocab);
  p.w_h = Eigen::MatrixXd::Zero(4 * hidden, hidden);
  p.bias = Eigen::VectorXd::Zero(4 * hidden);
  p.v = Eigen::VectorXd::Zero(hidden);
  p.b = 0.0;
  return p;
}

ApproxParams ApproxParams::init(int vocab, int hidden, uint64_t seed) {
  ApproxParams p = zeros(vocab, hidden);
  std::mt19937_64 gen(seed);
  auto draw = [&gen]() { return -0.08 + 0.16 * uniform01(gen); };
  for (Eigen::Index k = 0; k < p.w_x.size(); ++k) p.w_x.data()[k] = draw();
  for (Eigen::Index k = 0; k < p.w_h.size(); ++k) p.w_h.data()[k] = draw();
  for (Eigen::Index k = 0; k < p.bias.size(); ++k) p.bias.data()[k] = draw();
  for (Eigen::Index k = 0; k < p.v.size(); ++k) p.v.data()[k] = draw();
  p.b = draw();
  return p;
}

int64_t ApproxParams::num_weights() const {
  return static_cast<int64_t>(w_x.size()) + w_h.size() + bias.size() +
         v.size() + 1;
}

void ApproxParams::validate() const {
  check_dims(vocab, hidden);
  if (w_x.rows() != 4 * hidden || w_x.cols() != vocab ||
      w_h.rows() != 4 * hidden || w_h.cols() != hidden ||
      bias.size() != 4 * hidden || v.size() != hidden) {
    throw InvalidInputError("ApproxParams: inconsistent tensor shapes");
  }
  if (!w_x.allFinite() || !w_h.allFinite() || !bias.allFinite() ||
      !v.allFinite() || !std::isfinite(b)) {
    throw InvalidInputError("ApproxParams: non-finite parameter");
  }
}

ApproxGradients ApproxGradients::zeros(const ApproxParams& p) {
  ApproxGradients g;
  g.w_x = Eigen::MatrixXd::Zero(p.w_x.rows(), p.w_x.cols());
  g.w_h = Eigen::MatrixXd::Zero(p.w_h.rows(), p.w_h.cols());
  g.bias = Eigen::VectorXd::Zero(p.bias.size());
  g.v = Eigen::VectorXd::Zero(p.v.size());
  g.b = 0.0;
  return g;
}

void ApproxGradients::add_scaled(const ApproxGradients& other, double scale) {
  w_x += scale * other.w_x;
  w_h += scale * other.w_h;
  bias += scale * other.bias;
  v += scale * other.v;
  b += scale * other.b;
}

LocalVocab LocalVocab::build(const std::vector<TokenSeq>& seqs) {
  LocalVocab vocab;
  for (const TokenSeq& seq : seqs) {
    for (Token tok : seq) {
      const Token next = static_cast<Token>(vocab.to_local_.size());
      if (vocab.to_local_.emplace(tok, next).second &&
          vocab.to_local_.size() > static_cast<size_t>(kMaxLocalVocab)) {
        throw InvalidInputError("LocalVocab: token count exceeds cap");
      }
    }
  }
  return vocab;
}

TokenSeq LocalVocab::encode(const TokenSeq& seq) const {
  TokenSeq out;
  out.reserve(seq.size());
  for (Token tok : seq) {
    auto it = to_local_.find(tok);
    if (it == to_local_.end()) {
      throw InvalidInputError("LocalVocab: token not in vocabulary");
    }
    out.push_back(it->second);
  }
  return out;
}

LstmTrace lstm_forward(const ApproxParams& params, const TokenSeq& seq) {
  if (seq.empty()) {
    throw InvalidInputError("lstm_forward: empty sequence");
  }
  const int d = params.hidden;
  const int len = static_cast<int>(seq.size());
  LstmTrace tr;
  tr.inputs = seq;
  tr.i.resize(d, len);
  tr.f.resize(d, len);
  tr.o.resize(d, len);
  tr.g.resize(d, len);
  tr.c.resize(d, len);
  tr.h.resize(d, len);

  Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(d);
  Eigen::ArrayXd c_prev = Eigen::ArrayXd::Zero(d);
  for (int t = 0; t < len; ++t) {
    const Token x = seq[t];
    if (x < 0 || x >= params.vocab) {
      throw InvalidInputError("lstm_forward: local id out of range");
    }
    const Eigen::VectorXd z =
        params.w_x.col(x) + params.w_h * h_prev + params.bias;
    const Eigen::ArrayXd it = sigmoid(z.segment(0, d).array());
    const Eigen::ArrayXd ft = sigmoid(z.segment(d, d).array());
    const Eigen::ArrayXd ot = sigmoid(z.segment(2 * d, d).array());
    const Eigen::ArrayXd gt = z.segment(3 * d, d).array().tanh();
    const Eigen::ArrayXd ct = ft * c_prev + it * gt;
    const Eigen::ArrayXd ht = ot * ct.tanh();
    tr.i.col(t) = it.matrix();
    tr.f.col(t) = ft.matrix();
    tr.o.col(t) = ot.matrix();
    tr.g.col(t) = gt.matrix();
    tr.c.col(t) = ct.matrix();
    tr.h.col(t) = ht.matrix();
    h_prev = ht.matrix();
    c_prev = ct;
  }
  return tr;
}

Eigen::VectorXd encode(const ApproxParams& params, const TokenSeq& seq) {
  return lstm_forward(params, seq).final_h();
}

double approx_discrepancy(const ApproxParams& params, const TokenSeq& y,
                          const TokenSeq& y_prime) {
  const Eigen::VectorXd h = encode(params, y);
  const Eigen::VectorXd h_prime = encode(params, y_prime);
  return h.dot(h_prime) + params.v.dot(h + h_prime) + params.b;
}

std::vector<double> approx_discrepancy_matrix(
    const ApproxParams& params, const std::vector<TokenSeq>& candidates) {
  if (candidates.empty()) {
    throw InvalidInputError("approx_discrepancy_matrix: empty candidate list");
  }
  const size_t n = candidates.size();
  std::vector<Eigen::VectorXd> h;
  h.reserve(n);
  for (const TokenSeq& cand : candidates) {
    h.push_back(encode(params, cand));
  }
  std::vector<double> out(n * n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      out[i * n + j] = h[i].dot(h[j]) + params.v.dot(h[i] + h[j]) + params.b;
    }
  }
  return out;
}

namespace {

void lstm_backward(const ApproxParams& params, const LstmTrace& tr,
                   const Eigen::VectorXd& dh_final, ApproxGradients& grad) {
  const int d = params.hidden;
  const int len = static_cast<int>(tr.inputs.size());
  Eigen::VectorXd dh = dh_final;
  Eigen::ArrayXd dc = Eigen::ArrayXd::Zero(d);
  for (int t = len - 1; t >= 0; --t) {
    const Eigen::ArrayXd it = tr.i.col(t).array();
    const Eigen::ArrayXd ft = tr.f.col(t).array();
    const Eigen::ArrayXd ot = tr.o.col(t).array();
    const Eigen::ArrayXd gt = tr.g.col(t).array();
    const Eigen::ArrayXd tc = tr.c.col(t).array().tanh();

    const Eigen::ArrayXd dout_gate = dh.array() * tc;
    dc += dh.array() * ot * (1.0 - tc * tc);
    const Eigen::ArrayXd di = dc * gt;
    const Eigen::ArrayXd dg = dc * it;
    const Eigen::ArrayXd c_prev =
        t > 0 ? Eigen::ArrayXd(tr.c.col(t - 1).array())
              : Eigen::ArrayXd(Eigen::ArrayXd::Zero(d));
    const Eigen::ArrayXd df = dc * c_prev;
    const Eigen::ArrayXd dc_prev = dc * ft;

    Eigen::VectorXd dz(4 * d);
    dz.segment(0, d) = (di * it * (1.0 - it)).matrix();
    dz.segment(d, d) = (df * ft * (1.0 - ft)).matrix();
    dz.segment(2 * d, d) = (dout_gate * ot * (1.0 - ot)).matrix();
    dz.segment(3 * d, d) = (dg * (1.0 - gt * gt)).matrix();

    grad.w_x.col(tr.inputs[t]) += dz;
    if (t > 0) {
      grad.w_h += dz * tr.h.col(t - 1).transpose();
    }
    grad.bias += dz;
    dh = params.w_h.transpose() * dz;
    dc = dc_prev;
  }
}

double dataset_mse(const ApproxParams& params,
                   const std::vector<ApproxExample>& examples) {
  double sum = 0.0;
  for (const ApproxExample& ex : examples) {
    const double resid = approx_discrepancy(params, ex.a, ex.b) - ex.target;
    sum += resid * resid;
  }
  return sum / static_cast<double>(examples.size());
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& w_x, const Eigen::MatrixXd& w_h,
                        const Eigen::VectorXd& bias, const Eigen::VectorXd& v,
                        double b) {
  Eigen::VectorXd out(w_x.size() + w_h.size() + bias.size() + v.size() + 1);
  Eigen::Index pos = 0;
  out.segment(pos, w_x.size()) = Eigen::Map<const Eigen::VectorXd>(
      w_x.data(), w_x.size());
  pos += w_x.size();
  out.segment(pos, w_h.size()) = Eigen::Map<const Eigen::VectorXd>(
      w_h.data(), w_h.size());
  pos += w_h.size();
  out.segment(pos, bias.size()) = bias;
  pos += bias.size();
  out.segment(pos, v.size()) = v;
  pos += v.size();
  out[pos] = b;
  return out;
}

void unflatten(const Eigen::VectorXd& x, ApproxParams& p) {
  Eigen::Index pos = 0;
  Eigen::Map<Eigen::VectorXd>(p.w_x.data(), p.w_x.size()) =
      x.segment(pos, p.w_x.size());
  pos += p.w_x.size();
  Eigen::Map<Eigen::VectorXd>(p.w_h.data(), p.w_h.size()) =
      x.segment(pos, p.w_h.size());
  pos += p.w_h.size();
  p.bias = x.segment(pos, p.bias.size());
  pos += p.bias.size();
  p.v = x.segment(pos, p.v.size());
  pos += p.v.size();
  p.b = x[pos];
}

}  // namespace

double approx_loss_and_grad(const ApproxParams& params,
                            const ApproxExample& example,
                            ApproxGradients& grad) {
  const LstmTrace ta = lstm_forward(params, example.a);
  const LstmTrace tb = lstm_forward(params, example.b);
  const Eigen::VectorXd ha = ta.final_h();
  const Eigen::VectorXd hb = tb.final_h();
  const double out = ha.dot(hb) + params.v.dot(ha + hb) + params.b;
  const double resid = out - example.target;
  const double dout = 2.0 * resid;

  grad.v += dout * (ha + hb);
  grad.b += dout;
  lstm_backward(params, ta, Eigen::VectorXd(dout * (hb + params.v)), grad);
  lstm_backward(params, tb, Eigen::VectorXd(dout * (ha + params.v)), grad);
  return resid * resid;
}

ApproxTrainResult train_approximator(const std::vector<ApproxExample>& examples,
                                     int vocab,
                                     const ApproxTrainOptions& options) {
  if (examples.empty()) {
    throw InvalidInputError("train_approximator: empty training set");
  }
  if (options.epochs < 1 || options.batch_size < 1 ||
      options.learning_rate <= 0.0) {
    throw InvalidInputError("train_approximator: bad hyperparameters");
  }
  for (const ApproxExample& ex : examples) {
    if (!std::isfinite(ex.target)) {
      throw InvalidInputError("train_approximator: non-finite target");
    }
  }

  ApproxTrainResult result;
  result.params = ApproxParams::init(vocab, options.hidden, options.seed);
  result.initial_mse = dataset_mse(result.params, examples);

  Eigen::VectorXd theta =
      flatten(result.params.w_x, result.params.w_h, result.params.bias,
              result.params.v, result.params.b);
  Eigen::ArrayXd adam_m = Eigen::ArrayXd::Zero(theta.size());
  Eigen::ArrayXd adam_v = Eigen::ArrayXd::Zero(theta.size());
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  int64_t step = 0;

  const size_t n = examples.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 gen(options.seed);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    // Fisher-Yates with engine bits directly, so the schedule is stable
    // across standard libraries.
    for (size_t i = n - 1; i > 0; --i) {
      const size_t j = static_cast<size_t>(gen() % (i + 1));
      std::swap(order[i], order[j]);
    }

    double epoch_sum = 0.0;
    for (size_t start = 0; start < n; start += options.batch_size) {
      const size_t stop = std::min(n, start + options.batch_size);
      ApproxGradients grad = ApproxGradients::zeros(result.params);
      for (size_t k = start; k < stop; ++k) {
        epoch_sum +=
            approx_loss_and_grad(result.params, examples[order[k]], grad);
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      const Eigen::VectorXd g =
          inv * flatten(grad.w_x, grad.w_h, grad.bias, grad.v, grad.b);

      ++step;
      adam_m = kBeta1 * adam_m + (1.0 - kBeta1) * g.array();
      adam_v = kBeta2 * adam_v + (1.0 - kBeta2) * g.array().square();
      const double corr1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double corr2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      theta.array() -= options.learning_rate * (adam_m / corr1) /
                       ((adam_v / corr2).sqrt() + kEps);
      unflatten(theta, result.params);
    }
    const double epoch_mse = epoch_sum / static_cast<double>(n);
    if (!std::isfinite(epoch_mse)) {
      throw TrainingError("train_approximator: non-finite loss at epoch " +
                          std::to_string(epoch + 1));
    }
    result.epoch_loss.push_back(epoch_mse);
  }

  result.final_mse = dataset_mse(result.params, examples);
  return result;
}

ApproxDiscrepancy::ApproxDiscrepancy(ApproxParams params)
    : params_(std::move(params)) {
  params_.validate();
}

double ApproxDiscrepancy::pair(const TokenSeq& y,
                               const TokenSeq& y_prime) const {
  const LocalVocab vocab = LocalVocab::build({y, y_prime});
  return approx_discrepancy(params_, vocab.encode(y), vocab.encode(y_prime)) /
         kApproxTargetScale;
}

std::vector<double> ApproxDiscrepancy::block(
    const std::vector<TokenSeq>& candidates,
    const std::vector<TokenSeq>& evidences) const {
  std::vector<TokenSeq> all;
  all.reserve(candidates.size() + evidences.size());
  all.insert(all.end(), candidates.begin(), candidates.end());
  all.insert(all.end(), evidences.begin(), evidences.end());
  const LocalVocab vocab = LocalVocab::build(all);

  std::vector<Eigen::VectorXd> hc;
  hc.reserve(candidates.size());
  for (const TokenSeq& cand : candidates) {
    hc.push_back(encode(params_, vocab.encode(cand)));
  }
  std::vector<Eigen::VectorXd> he;
  if (candidates == evidences) {
    he = hc;
  } else {
    he.reserve(evidences.size());
    for (const TokenSeq& ev : evidences) {
      he.push_back(encode(params_, vocab.encode(ev)));
    }
  }

  std::vector<double> out(candidates.size() * evidences.size());
  for (size_t i = 0; i < hc.size(); ++i) {
    for (size_t j = 0; j < he.size(); ++j) {
      out[i * he.size() + j] =
          (hc[i].dot(he[j]) + params_.v.dot(hc[i] + he[j]) + params_.b) /
          kApproxTargetScale;
    }
  }
  return out;
}

}  // namespace latermbr
