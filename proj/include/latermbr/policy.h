#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "latermbr/types.h"

namespace latermbr {

inline constexpr int kNumActions = 2;    // (alpha, beta)
inline constexpr int kPolicyHidden = 100;
inline constexpr double kBeamCap = 100.0;  // beam-size feature normalizer

// Gaussian policy over the two score weights plus an independent two-layer
// baseline net. Both nets share the input feature vector, nothing else.
struct PolicyParams {
  int input_dim = 0;
  Eigen::MatrixXd w1;       // hidden x input, shared tanh layer
  Eigen::VectorXd b1;       // hidden
  Eigen::MatrixXd w_mu;     // actions x hidden
  Eigen::VectorXd b_mu;     // actions
  Eigen::MatrixXd w_sigma;  // actions x hidden, pre-softplus
  Eigen::VectorXd b_sigma;  // actions
  Eigen::MatrixXd bw1;      // hidden x input, baseline net
  Eigen::VectorXd bb1;      // hidden
  Eigen::RowVectorXd bw2;   // 1 x hidden
  double bb2 = 0.0;

  // All weights uniform in [-0.08, 0.08] from a fixed seed.
  static PolicyParams init(int input_dim, uint64_t seed);
  static PolicyParams zeros(int input_dim);
  void validate() const;
};

struct PolicyForward {
  Eigen::VectorXd hidden;     // tanh activations of the shared layer
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma_pre;  // sigma head before softplus
  Eigen::VectorXd sigma;      // softplus(sigma_pre), always positive
};

PolicyForward policy_forward(const PolicyParams& params,
                             const Eigen::VectorXd& s);

// Sum over actions of -(a_i - mu_i)^2 / (2 sigma_i^2) - log sigma_i
// - 0.5 log(2 pi).
double log_density(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma,
                   const Eigen::VectorXd& a);

// Gradient tensors of the policy half of PolicyParams.
struct PolicyGradients {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w_mu;
  Eigen::VectorXd b_mu;
  Eigen::MatrixXd w_sigma;
  Eigen::VectorXd b_sigma;

  static PolicyGradients zeros(const PolicyParams& p);
};

// d log pi(a|s) / d theta for one episode. Exposed for gradient checking.
PolicyGradients log_pi_gradients(const PolicyParams& params,
                                 const Eigen::VectorXd& s,
                                 const Eigen::VectorXd& a);

// Baseline value b_s of the independent two-layer net.
double baseline_value(const PolicyParams& params, const Eigen::VectorXd& s);

struct Episode {
  Eigen::VectorXd s;
  Eigen::VectorXd a;
  double reward = 0.0;
};

struct PolicyUpdateStats {
  double mean_reward = 0.0;
  double baseline_mse = 0.0;  // before the baseline step
};

// One REINFORCE step: gradient ascent on mean (reward - b_s) grad log pi,
// then one MSE descent step of the baseline toward the observed rewards,
// both with the given learning rate. Zero advantage on every episode leaves
// the policy weights bit-identical.
PolicyUpdateStats reinforce_update(PolicyParams& params,
                                   const std::vector<Episode>& episodes,
                                   double learning_rate);

enum class ActMode { kSample, kDeterministic };

// Deterministic mode returns mu; sample mode draws from N(mu, diag sigma^2)
// with Box-Muller over the engine's raw bits. Values are pre-clamp.
Eigen::VectorXd act(const PolicyParams& params, const Eigen::VectorXd& s,
                    ActMode mode, std::mt19937_64& gen);

// Weights below zero invert the score function's intent; clamp before use.
Eigen::VectorXd clamp_nonneg(Eigen::VectorXd a);

// Fixed 5-dimensional summary of one decoding instance, available right
// after beam search: relative source length, mean and std of the evidence
// avg_logprobs, relative discard-pool size, relative beam size.
Eigen::VectorXd decode_features(int source_len, int max_length,
                                const std::vector<double>& evidence_avg_logprobs,
                                size_t pool_size, int beam_size);

}  // namespace latermbr
