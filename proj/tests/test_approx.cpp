#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "latermbr/approx.h"
#include "reference_bleu.h"

using namespace latermbr;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

TokenSeq random_local_seq(std::mt19937_64& gen, int vocab, int max_len) {
  TokenSeq s;
  const int len = 1 + static_cast<int>(gen() % max_len);
  for (int i = 0; i < len; ++i) s.push_back(static_cast<Token>(gen() % vocab));
  return s;
}

}  // namespace

TEST_CASE("lstm forward matches a hand-stepped cell") {
  ApproxParams p = ApproxParams::zeros(2, 1);
  p.w_x << 0.5, -0.3,
           0.2,  0.1,
          -0.4,  0.6,
           0.7, -0.2;
  p.w_h << 0.1, -0.5, 0.3, 0.9;
  p.bias << 0.01, 0.02, 0.03, 0.04;
  p.v << 0.25;
  p.b = -0.1;

  const LstmTrace trace = lstm_forward(p, {0, 1});
  REQUIRE(trace.h.cols() == 2);

  const double i1 = sigmoid(0.51);
  const double f1 = sigmoid(0.22);
  const double o1 = sigmoid(-0.37);
  const double g1 = std::tanh(0.74);
  const double c1 = i1 * g1;
  const double h1 = o1 * std::tanh(c1);
  CHECK(trace.h(0, 0) == doctest::Approx(h1).epsilon(1e-15));

  const double i2 = sigmoid(-0.3 + 0.1 * h1 + 0.01);
  const double f2 = sigmoid(0.1 - 0.5 * h1 + 0.02);
  const double o2 = sigmoid(0.6 + 0.3 * h1 + 0.03);
  const double g2 = std::tanh(-0.2 + 0.9 * h1 + 0.04);
  const double c2 = f2 * c1 + i2 * g2;
  const double h2 = o2 * std::tanh(c2);
  CHECK(trace.h(0, 1) == doctest::Approx(h2).epsilon(1e-15));
  CHECK(trace.c(0, 1) == doctest::Approx(c2).epsilon(1e-15));
  CHECK(encode(p, {0, 1})(0) == trace.h(0, 1));
}

TEST_CASE("lstm forward validates its input") {
  const ApproxParams p = ApproxParams::init(3, 2, 7);
  CHECK_THROWS_AS(lstm_forward(p, {}), InvalidInputError);
  CHECK_THROWS_AS(lstm_forward(p, {3}), InvalidInputError);
  CHECK_THROWS_AS(lstm_forward(p, {-1}), InvalidInputError);
}

TEST_CASE("discrepancy output is exactly symmetric") {
  std::mt19937_64 gen(51);
  const ApproxParams p = ApproxParams::init(6, 5, 8);
  for (int trial = 0; trial < 50; ++trial) {
    const TokenSeq a = random_local_seq(gen, 6, 7);
    const TokenSeq b = random_local_seq(gen, 6, 7);
    CHECK(approx_discrepancy(p, a, b) == approx_discrepancy(p, b, a));
  }
}

TEST_CASE("matrix path equals pairwise evaluation") {
  std::mt19937_64 gen(52);
  const ApproxParams p = ApproxParams::init(5, 4, 9);
  std::vector<TokenSeq> cands;
  for (int i = 0; i < 7; ++i) cands.push_back(random_local_seq(gen, 5, 6));

  const auto matrix = approx_discrepancy_matrix(p, cands);
  REQUIRE(matrix.size() == cands.size() * cands.size());
  for (size_t i = 0; i < cands.size(); ++i) {
    for (size_t j = 0; j < cands.size(); ++j) {
      CHECK(matrix[i * cands.size() + j] ==
            approx_discrepancy(p, cands[i], cands[j]));
    }
  }
}

TEST_CASE("local vocab assigns first-occurrence ids") {
  const LocalVocab vocab =
      LocalVocab::build({TokenSeq{40, 7, 40}, TokenSeq{7, 99}});
  CHECK(vocab.size() == 3);
  CHECK(vocab.encode({40, 7, 40, 99}) == TokenSeq{0, 1, 0, 2});
  CHECK_THROWS_AS(vocab.encode({5}), InvalidInputError);
}

TEST_CASE("loss gradient matches finite differences") {
  std::mt19937_64 gen(53);
  ApproxParams p = ApproxParams::init(5, 3, 10);
  ApproxExample ex;
  ex.a = random_local_seq(gen, 5, 5);
  ex.b = random_local_seq(gen, 5, 5);
  ex.target = 0.07;

  ApproxGradients grad = ApproxGradients::zeros(p);
  approx_loss_and_grad(p, ex, grad);

  const double eps = 1e-5;
  auto fd = [&](double* slot) {
    const double saved = *slot;
    *slot = saved + eps;
    ApproxGradients scratch = ApproxGradients::zeros(p);
    const double up = approx_loss_and_grad(p, ex, scratch);
    *slot = saved - eps;
    scratch = ApproxGradients::zeros(p);
    const double down = approx_loss_and_grad(p, ex, scratch);
    *slot = saved;
    return (up - down) / (2.0 * eps);
  };
  auto check_close = [](double analytic, double numeric) {
    const double scale = std::abs(analytic) + std::abs(numeric) + 1e-8;
    CHECK(std::abs(analytic - numeric) / scale < 1e-5);
  };

  for (int r = 0; r < p.w_x.rows(); ++r) {
    for (int c = 0; c < p.w_x.cols(); ++c) {
      check_close(grad.w_x(r, c), fd(&p.w_x(r, c)));
    }
  }
  for (int r = 0; r < p.w_h.rows(); ++r) {
    for (int c = 0; c < p.w_h.cols(); ++c) {
      check_close(grad.w_h(r, c), fd(&p.w_h(r, c)));
    }
  }
  for (int r = 0; r < p.bias.size(); ++r) {
    check_close(grad.bias(r), fd(&p.bias(r)));
  }
  for (int r = 0; r < p.v.size(); ++r) {
    check_close(grad.v(r), fd(&p.v(r)));
  }
  check_close(grad.b, fd(&p.b));
}

TEST_CASE("training reduces the mean squared error") {
  std::mt19937_64 gen(54);
  std::vector<ApproxExample> examples;
  for (int i = 0; i < 80; ++i) {
    ApproxExample ex;
    ex.a = random_local_seq(gen, 6, 6);
    ex.b = random_local_seq(gen, 6, 6);
    ex.target = kApproxTargetScale *
                (1.0 - oracles::reference_smoothed_bleu(ex.a, ex.b));
    examples.push_back(ex);
  }

  ApproxTrainOptions options;
  options.epochs = 8;
  options.hidden = 8;
  options.learning_rate = 2e-3;
  options.batch_size = 16;
  const ApproxTrainResult result = train_approximator(examples, 6, options);

  CHECK(result.epoch_loss.size() == 8);
  CHECK(result.final_mse < result.initial_mse);
  for (double loss : result.epoch_loss) CHECK(std::isfinite(loss));
}

TEST_CASE("training is deterministic for a fixed seed") {
  std::mt19937_64 gen(55);
  std::vector<ApproxExample> examples;
  for (int i = 0; i < 24; ++i) {
    ApproxExample ex;
    ex.a = random_local_seq(gen, 4, 5);
    ex.b = random_local_seq(gen, 4, 5);
    ex.target = 0.1 * static_cast<double>(i) / 24.0;
    examples.push_back(ex);
  }
  ApproxTrainOptions options;
  options.epochs = 3;
  options.hidden = 4;
  options.batch_size = 8;

  const ApproxTrainResult a = train_approximator(examples, 4, options);
  const ApproxTrainResult b = train_approximator(examples, 4, options);
  CHECK(a.epoch_loss == b.epoch_loss);
  CHECK(a.final_mse == b.final_mse);
  CHECK((a.params.w_x - b.params.w_x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.params.w_h - b.params.w_h).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.params.v - b.params.v).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.params.b == b.params.b);
}

TEST_CASE("the discrepancy adapter reproduces the raw network output") {
  std::mt19937_64 gen(56);
  const ApproxParams p = ApproxParams::init(8, 4, 11);
  const ApproxDiscrepancy delta(p);

  std::vector<TokenSeq> cands;
  for (int i = 0; i < 4; ++i) {
    TokenSeq s;
    const int len = 1 + static_cast<int>(gen() % 5);
    for (int k = 0; k < len; ++k) {
      s.push_back(static_cast<Token>(100 + gen() % 8));
    }
    cands.push_back(s);
  }

  // pair(): vocabulary over the two sequences.
  const LocalVocab vocab_pair = LocalVocab::build({cands[0], cands[1]});
  CHECK(delta.pair(cands[0], cands[1]) ==
        approx_discrepancy(p, vocab_pair.encode(cands[0]),
                           vocab_pair.encode(cands[1])) /
            kApproxTargetScale);

  // block(): one vocabulary over all inputs.
  const auto block = delta.block(cands, cands);
  const LocalVocab vocab_all = LocalVocab::build(cands);
  std::vector<TokenSeq> encoded;
  for (const auto& c : cands) encoded.push_back(vocab_all.encode(c));
  const auto raw = approx_discrepancy_matrix(p, encoded);
  REQUIRE(block.size() == raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    CHECK(block[i] == raw[i] / kApproxTargetScale);
  }
}

TEST_CASE("params validate shapes and initialization is reproducible") {
  const ApproxParams a = ApproxParams::init(5, 3, 12);
  const ApproxParams b = ApproxParams::init(5, 3, 12);
  CHECK((a.w_x - b.w_x).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.b == b.b);
  CHECK(a.w_x.cwiseAbs().maxCoeff() <= 0.08);

  ApproxParams bad = ApproxParams::init(5, 3, 12);
  bad.w_h = Eigen::MatrixXd::Zero(2, 2);
  CHECK_THROWS_AS(bad.validate(), InvalidInputError);
  CHECK_NOTHROW(a.validate());

  CHECK(a.num_weights() ==
        4 * 3 * 5 + 4 * 3 * 3 + 4 * 3 + 3 + 1);
}
