#include "latermbr/policy.h"

#include <cmath>
#include <string>
#include <utility>

namespace latermbr {

namespace {

constexpr double kHalfLog2Pi = 0.918938533204672741780329736406;  // ln(2*pi)/2
constexpr double kTwoPi = 6.283185307179586476925286766559;

double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * (1.0 / 9007199254740992.0);
}

// Standard normal via Box-Muller on the engine's raw bits.
double standard_normal(std::mt19937_64& gen) {
  const double u1 =
      (static_cast<double>(gen() >> 11) + 1.0) * (1.0 / 9007199254740992.0);
  const double u2 = uniform01(gen);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

void check_input(const PolicyParams& params, const Eigen::VectorXd& s) {
  if (s.size() != params.input_dim) {
    throw InvalidInputError("policy: feature dimension mismatch");
  }
  if (!s.allFinite()) {
    throw InvalidInputError("policy: non-finite features");
  }
}

bool all_finite(const PolicyGradients& g) {
  return g.w1.allFinite() && g.b1.allFinite() && g.w_mu.allFinite() &&
         g.b_mu.allFinite() && g.w_sigma.allFinite() && g.b_sigma.allFinite();
}

}  // namespace

PolicyParams PolicyParams::zeros(int input_dim) {
  if (input_dim < 1) {
    throw InvalidInputError("PolicyParams: input_dim must be >= 1");
  }
  PolicyParams p;
  p.input_dim = input_dim;
  p.w1 = Eigen::MatrixXd::Zero(kPolicyHidden, input_dim);
  p.b1 = Eigen::VectorXd::Zero(kPolicyHidden);
  p.w_mu = Eigen::MatrixXd::Zero(kNumActions, kPolicyHidden);
  p.b_mu = Eigen::VectorXd::Zero(kNumActions);
  p.w_sigma = Eigen::MatrixXd::Zero(kNumActions, kPolicyHidden);
  p.b_sigma = Eigen::VectorXd::Zero(kNumActions);
  p.bw1 = Eigen::MatrixXd::Zero(kPolicyHidden, input_dim);
  p.bb1 = Eigen::VectorXd::Zero(kPolicyHidden);
  p.bw2 = Eigen::RowVectorXd::Zero(kPolicyHidden);
  p.bb2 = 0.0;
  return p;
}

PolicyParams PolicyParams::init(int input_dim, uint64_t seed) {
  PolicyParams p = zeros(input_dim);
  std::mt19937_64 gen(seed);
  auto fill = [&gen](double* data, Eigen::Index n) {
    for (Eigen::Index k = 0; k < n; ++k) {
      data[k] = -0.08 + 0.16 * uniform01(gen);
    }
  };
  fill(p.w1.data(), p.w1.size());
  fill(p.b1.data(), p.b1.size());
  fill(p.w_mu.data(), p.w_mu.size());
  fill(p.b_mu.data(), p.b_mu.size());
  fill(p.w_sigma.data(), p.w_sigma.size());
  fill(p.b_sigma.data(), p.b_sigma.size());
  fill(p.bw1.data(), p.bw1.size());
  fill(p.bb1.data(), p.bb1.size());
  fill(p.bw2.data(), p.bw2.size());
  fill(&p.bb2, 1);
  return p;
}

void PolicyParams::validate() const {
  if (input_dim < 1 || w1.rows() != kPolicyHidden ||
      w1.cols() != input_dim || b1.size() != kPolicyHidden ||
      w_mu.rows() != kNumActions || w_mu.cols() != kPolicyHidden ||
      b_mu.size() != kNumActions || w_sigma.rows() != kNumActions ||
      w_sigma.cols() != kPolicyHidden || b_sigma.size() != kNumActions ||
      bw1.rows() != kPolicyHidden || bw1.cols() != input_dim ||
      bb1.size() != kPolicyHidden || bw2.size() != kPolicyHidden) {
    throw InvalidInputError("PolicyParams: inconsistent tensor shapes");
  }
  if (!w1.allFinite() || !b1.allFinite() || !w_mu.allFinite() ||
      !b_mu.allFinite() || !w_sigma.allFinite() || !b_sigma.allFinite() ||
      !bw1.allFinite() || !bb1.allFinite() || !bw2.allFinite() ||
      !std::isfinite(bb2)) {
    throw InvalidInputError("PolicyParams: non-finite parameter");
  }
}

PolicyForward policy_forward(const PolicyParams& params,
                             const Eigen::VectorXd& s) {
  check_input(params, s);
  PolicyForward fwd;
  fwd.hidden = (params.w1 * s + params.b1).array().tanh().matrix();
  fwd.mu = params.w_mu * fwd.hidden + params.b_mu;
  fwd.sigma_pre = params.w_sigma * fwd.hidden + params.b_sigma;
  fwd.sigma.resize(fwd.sigma_pre.size());
  for (Eigen::Index i = 0; i < fwd.sigma_pre.size(); ++i) {
    fwd.sigma[i] = softplus(fwd.sigma_pre[i]);
  }
  return fwd;
}

double log_density(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma,
                   const Eigen::VectorXd& a) {
  if (mu.size() != sigma.size() || mu.size() != a.size()) {
    throw InvalidInputError("log_density: dimension mismatch");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (!(sigma[i] > 0.0)) {
      throw InvalidInputError("log_density: sigma must be positive");
    }
    const double diff = a[i] - mu[i];
    sum += -diff * diff / (2.0 * sigma[i] * sigma[i]) - std::log(sigma[i]) -
           kHalfLog2Pi;
  }
  return sum;
}

PolicyGradients PolicyGradients::zeros(const PolicyParams& p) {
  PolicyGradients g;
  g.w1 = Eigen::MatrixXd::Zero(p.w1.rows(), p.w1.cols());
  g.b1 = Eigen::VectorXd::Zero(p.b1.size());
  g.w_mu = Eigen::MatrixXd::Zero(p.w_mu.rows(), p.w_mu.cols());
  g.b_mu = Eigen::VectorXd::Zero(p.b_mu.size());
  g.w_sigma = Eigen::MatrixXd::Zero(p.w_sigma.rows(), p.w_sigma.cols());
  g.b_sigma = Eigen::VectorXd::Zero(p.b_sigma.size());
  return g;
}

PolicyGradients log_pi_gradients(const PolicyParams& params,
                                 const Eigen::VectorXd& s,
                                 const Eigen::VectorXd& a) {
  const PolicyForward fwd = policy_forward(params, s);
  if (a.size() != kNumActions) {
    throw InvalidInputError("log_pi_gradients: bad action dimension");
  }

  Eigen::VectorXd d_mu(kNumActions);
  Eigen::VectorXd d_sigma_pre(kNumActions);
  for (int i = 0; i < kNumActions; ++i) {
    const double diff = a[i] - fwd.mu[i];
    const double sig = fwd.sigma[i];
    d_mu[i] = diff / (sig * sig);
    const double d_sigma = diff * diff / (sig * sig * sig) - 1.0 / sig;
    d_sigma_pre[i] = d_sigma * sigmoid(fwd.sigma_pre[i]);
  }

  PolicyGradients g = PolicyGradients::zeros(params);
  g.w_mu = d_mu * fwd.hidden.transpose();
  g.b_mu = d_mu;
  g.w_sigma = d_sigma_pre * fwd.hidden.transpose();
  g.b_sigma = d_sigma_pre;

  const Eigen::VectorXd d_hidden =
      params.w_mu.transpose() * d_mu + params.w_sigma.transpose() * d_sigma_pre;
  const Eigen::VectorXd d_z1 =
      (d_hidden.array() * (1.0 - fwd.hidden.array().square())).matrix();
  g.w1 = d_z1 * s.transpose();
  g.b1 = d_z1;
  return g;
}

double baseline_value(const PolicyParams& params, const Eigen::VectorXd& s) {
  check_input(params, s);
  const Eigen::VectorXd hidden =
      (params.bw1 * s + params.bb1).array().tanh().matrix();
  return params.bw2.dot(hidden) + params.bb2;
}

PolicyUpdateStats reinforce_update(PolicyParams& params,
                                   const std::vector<Episode>& episodes,
                                   double learning_rate) {
  if (episodes.empty()) {
    throw InvalidInputError("reinforce_update: no episodes");
  }
  if (!(learning_rate > 0.0)) {
    throw InvalidInputError("reinforce_update: learning rate must be positive");
  }

  PolicyGradients total = PolicyGradients::zeros(params);
  Eigen::MatrixXd d_bw1 = Eigen::MatrixXd::Zero(params.bw1.rows(),
                                                params.bw1.cols());
  Eigen::VectorXd d_bb1 = Eigen::VectorXd::Zero(params.bb1.size());
  Eigen::RowVectorXd d_bw2 = Eigen::RowVectorXd::Zero(params.bw2.size());
  double d_bb2 = 0.0;

  PolicyUpdateStats stats;
  for (const Episode& ep : episodes) {
    if (!std::isfinite(ep.reward)) {
      throw TrainingError("reinforce_update: non-finite reward");
    }
    const double value = baseline_value(params, ep.s);
    const double advantage = ep.reward - value;
    stats.mean_reward += ep.reward;
    stats.baseline_mse += (value - ep.reward) * (value - ep.reward);

    if (advantage != 0.0) {
      const PolicyGradients g = log_pi_gradients(params, ep.s, ep.a);
      total.w1 += advantage * g.w1;
      total.b1 += advantage * g.b1;
      total.w_mu += advantage * g.w_mu;
      total.b_mu += advantage * g.b_mu;
      total.w_sigma += advantage * g.w_sigma;
      total.b_sigma += advantage * g.b_sigma;
    }

    // Baseline MSE gradient, baseline treated as an independent regressor.
    const double d_value = 2.0 * (value - ep.reward);
    if (d_value != 0.0) {
      const Eigen::VectorXd hidden =
          (params.bw1 * ep.s + params.bb1).array().tanh().matrix();
      const Eigen::VectorXd d_h = d_value * params.bw2.transpose();
      const Eigen::VectorXd d_z =
          (d_h.array() * (1.0 - hidden.array().square())).matrix();
      d_bw1 += d_z * ep.s.transpose();
      d_bb1 += d_z;
      d_bw2 += d_value * hidden.transpose();
      d_bb2 += d_value;
    }
  }

  const double inv = 1.0 / static_cast<double>(episodes.size());
  stats.mean_reward *= inv;
  stats.baseline_mse *= inv;

  if (!all_finite(total) || !d_bw1.allFinite() || !d_bb1.allFinite() ||
      !d_bw2.allFinite() || !std::isfinite(d_bb2)) {
    throw TrainingError("reinforce_update: non-finite gradient");
  }

  const double step = learning_rate * inv;
  params.w1 += step * total.w1;
  params.b1 += step * total.b1;
  params.w_mu += step * total.w_mu;
  params.b_mu += step * total.b_mu;
  params.w_sigma += step * total.w_sigma;
  params.b_sigma += step * total.b_sigma;

  params.bw1 -= step * d_bw1;
  params.bb1 -= step * d_bb1;
  params.bw2 -= step * d_bw2;
  params.bb2 -= step * d_bb2;
  return stats;
}

Eigen::VectorXd act(const PolicyParams& params, const Eigen::VectorXd& s,
                    ActMode mode, std::mt19937_64& gen) {
  const PolicyForward fwd = policy_forward(params, s);
  if (mode == ActMode::kDeterministic) {
    return fwd.mu;
  }
  Eigen::VectorXd a(fwd.mu.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    a[i] = fwd.mu[i] + fwd.sigma[i] * standard_normal(gen);
  }
  return a;
}

Eigen::VectorXd clamp_nonneg(Eigen::VectorXd a) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    a[i] = std::max(a[i], 0.0);
  }
  return a;
}

Eigen::VectorXd decode_features(int source_len, int max_length,
                                const std::vector<double>& evidence_avg_logprobs,
                                size_t pool_size, int beam_size) {
  if (source_len < 1 || max_length < 1 || beam_size < 1) {
    throw InvalidInputError("decode_features: sizes must be positive");
  }
  double mean = 0.0;
  double var = 0.0;
  if (!evidence_avg_logprobs.empty()) {
    for (double lp : evidence_avg_logprobs) mean += lp;
    mean /= static_cast<double>(evidence_avg_logprobs.size());
    for (double lp : evidence_avg_logprobs) {
      var += (lp - mean) * (lp - mean);
    }
    var /= static_cast<double>(evidence_avg_logprobs.size());
  }
  Eigen::VectorXd s(5);
  s[0] = static_cast<double>(source_len) / static_cast<double>(max_length);
  s[1] = mean;
  s[2] = std::sqrt(var);
  s[3] = static_cast<double>(pool_size) /
         (static_cast<double>(beam_size) * static_cast<double>(source_len));
  s[4] = static_cast<double>(beam_size) / kBeamCap;
  return s;
}

}  // namespace latermbr
