#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "latermbr/risk.h"
#include "latermbr/types.h"

namespace latermbr {

// Training targets are discrepancies scaled by this factor; consumers of the
// raw network output divide by it to recover Delta.
inline constexpr double kApproxTargetScale = 0.1;

// One-hot input width is bounded; larger local vocabularies are an error.
inline constexpr int kMaxLocalVocab = 4096;

// A single LSTM cell shared by both sequences of a pair, plus the symmetric
// output layer h . h' + v . (h + h') + b. Gate blocks are packed in the row
// order input, forget, output, candidate.
struct ApproxParams {
  int vocab = 0;
  int hidden = 0;
  Eigen::MatrixXd w_x;   // 4*hidden x vocab
  Eigen::MatrixXd w_h;   // 4*hidden x hidden
  Eigen::VectorXd bias;  // 4*hidden
  Eigen::VectorXd v;     // hidden
  double b = 0.0;

  // All tensors uniform in [-0.08, 0.08] from a fixed seed.
  static ApproxParams init(int vocab, int hidden, uint64_t seed);
  static ApproxParams zeros(int vocab, int hidden);

  int64_t num_weights() const;
  void validate() const;  // shape and finiteness checks
};

// Gradients (or any tangent) with the same shapes as ApproxParams.
struct ApproxGradients {
  Eigen::MatrixXd w_x;
  Eigen::MatrixXd w_h;
  Eigen::VectorXd bias;
  Eigen::VectorXd v;
  double b = 0.0;

  static ApproxGradients zeros(const ApproxParams& p);
  void add_scaled(const ApproxGradients& other, double scale);
};

// First-occurrence mapping from the distinct tokens of one rerank task to
// dense ids starting at 0. The approximator only ever sees local ids.
class LocalVocab {
 public:
  static LocalVocab build(const std::vector<TokenSeq>& seqs);

  int size() const { return static_cast<int>(to_local_.size()); }
  TokenSeq encode(const TokenSeq& seq) const;  // unseen token -> invalid-input

 private:
  std::unordered_map<Token, Token> to_local_;
};

// Forward-pass record of one sequence, kept around for backpropagation.
struct LstmTrace {
  TokenSeq inputs;
  Eigen::MatrixXd i, f, o, g, c, h;  // hidden x len

  Eigen::VectorXd final_h() const {
    return h.cols() > 0 ? Eigen::VectorXd(h.col(h.cols() - 1))
                        : Eigen::VectorXd(Eigen::VectorXd::Zero(h.rows()));
  }
};

// Runs the cell over one-hot inputs from a zero initial state.
LstmTrace lstm_forward(const ApproxParams& params, const TokenSeq& seq);

// Final hidden state of a sequence of local ids.
Eigen::VectorXd encode(const ApproxParams& params, const TokenSeq& seq);

// Raw symmetric output for a pair of local-id sequences. Approximates
// kApproxTargetScale * (1 - smoothed_bleu) after training.
double approx_discrepancy(const ApproxParams& params, const TokenSeq& y,
                          const TokenSeq& y_prime);

// N x N row-major matrix of raw outputs; each candidate is encoded once.
std::vector<double> approx_discrepancy_matrix(
    const ApproxParams& params, const std::vector<TokenSeq>& candidates);

struct ApproxExample {
  TokenSeq a;
  TokenSeq b;
  double target = 0.0;  // already scaled by kApproxTargetScale
};

// Squared error of one example; its gradient through the full unrolled cell
// is accumulated into grad (callers zero it first). Exposed for gradient
// checking.
double approx_loss_and_grad(const ApproxParams& params,
                            const ApproxExample& example,
                            ApproxGradients& grad);

struct ApproxTrainOptions {
  int epochs = 50;
  double learning_rate = 1e-4;
  int batch_size = 64;
  int hidden = 32;
  uint64_t seed = 1;
};

struct ApproxTrainResult {
  ApproxParams params;
  std::vector<double> epoch_loss;  // mean squared error seen during each epoch
  double initial_mse = 0.0;
  double final_mse = 0.0;
};

// Adam on the MSE over shuffled mini-batches. vocab bounds the local ids the
// trained model accepts.
ApproxTrainResult train_approximator(const std::vector<ApproxExample>& examples,
                                     int vocab,
                                     const ApproxTrainOptions& options);

// DiscrepancySource adapter: builds a per-call LocalVocab (the per-input
// re-ID step), scores with the network, and divides by kApproxTargetScale.
// Values are only comparable within one call.
class ApproxDiscrepancy : public DiscrepancySource {
 public:
  explicit ApproxDiscrepancy(ApproxParams params);

  double pair(const TokenSeq& y, const TokenSeq& y_prime) const override;
  std::vector<double> block(
      const std::vector<TokenSeq>& candidates,
      const std::vector<TokenSeq>& evidences) const override;

  const ApproxParams& params() const { return params_; }

 private:
  ApproxParams params_;
};

}  // namespace latermbr
