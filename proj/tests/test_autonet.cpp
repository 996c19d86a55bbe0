#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "rada/autonet.hpp"
#include "rada/errors.hpp"
#include "support.hpp"

using namespace rada;
using rada::test::max_abs_diff;
using rada::test::random_matrix;

namespace {

// Scalar-by-scalar evaluator written directly from the layer definition.
Matrix reference_forward(const NetworkParams& p, const Matrix& x, Activation act) {
  std::vector<std::vector<double>> a(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) a[r].assign(x.row(r).begin(), x.row(r).end());
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& w = p.layers[l];
    const std::size_t fan_in = w.rows() - 1;
    for (auto& row : a) {
      std::vector<double> next(w.cols());
      for (std::size_t j = 0; j < w.cols(); ++j) {
        double z = w(fan_in, j);
        for (std::size_t i = 0; i < fan_in; ++i) z += row[i] * w(i, j);
        const bool hidden = l + 1 < p.layers.size();
        next[j] = hidden && act == Activation::relu ? std::max(z, 0.0) : z;
      }
      row = next;
    }
  }
  Matrix out(x.rows(), p.output_width());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < out.cols(); ++j) out(r, j) = a[r][j];
  return out;
}

NetworkParams random_net(std::vector<std::size_t> widths, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto p = init_network(widths, rng);
  std::normal_distribution<double> n(0.0, 0.1);
  for (auto& l : p.layers)
    for (std::size_t j = 0; j < l.cols(); ++j) l(l.rows() - 1, j) = n(rng);
  return p;
}

}  // namespace

TEST(Forward, IdentityLayerPassesInputThrough) {
  NetworkParams p;
  p.layers.push_back(Matrix{{1, 0}, {0, 1}, {0, 0}});
  const Matrix x{{0.5, -2}, {3, 4}};
  EXPECT_EQ(forward(p, x).output, x);
}

TEST(Forward, ZeroWeightsGiveZeroOutput) {
  NetworkParams p;
  p.layers = {Matrix(4, 5), Matrix(6, 2)};
  std::mt19937_64 rng(1);
  const auto out = forward(p, random_matrix(3, 3, rng)).output;
  EXPECT_EQ(out, Matrix(3, 2));
}

TEST(Forward, MatchesScalarReference) {
  const auto p = random_net({4, 7, 3}, 21);
  std::mt19937_64 rng(22);
  const auto x = random_matrix(5, 4, rng);
  for (auto act : {Activation::relu, Activation::identity})
    EXPECT_LE(max_abs_diff(forward(p, x, act).output, reference_forward(p, x, act)), 1e-12);
}

TEST(Forward, WidthMismatchThrows) {
  const auto p = random_net({4, 3}, 1);
  EXPECT_THROW(forward(p, Matrix(2, 5)), DimensionError);
}

TEST(InitNetwork, GlorotBoundsAndZeroBias) {
  std::mt19937_64 rng(3);
  const std::vector<std::size_t> widths{10, 20, 5};
  const auto p = init_network(widths, rng);
  ASSERT_EQ(p.layers.size(), 2u);
  for (std::size_t l = 0; l < 2; ++l) {
    const auto& w = p.layers[l];
    EXPECT_EQ(w.rows(), widths[l] + 1);
    EXPECT_EQ(w.cols(), widths[l + 1]);
    const double bound = std::sqrt(6.0 / static_cast<double>(widths[l] + widths[l + 1]));
    for (std::size_t i = 0; i + 1 < w.rows(); ++i)
      for (std::size_t j = 0; j < w.cols(); ++j) EXPECT_LE(std::abs(w(i, j)), bound);
    for (std::size_t j = 0; j < w.cols(); ++j) EXPECT_EQ(w(w.rows() - 1, j), 0.0);
  }
  EXPECT_EQ(p.parameter_count(), 11u * 20u + 21u * 5u);
}

TEST(SoftmaxCe, UniformLogits) {
  const auto r = softmax_ce_loss(Matrix{{0, 0}}, std::vector<int>{0});
  EXPECT_NEAR(r.loss, 0.693147, 1e-6);
}

TEST(SoftmaxCe, ExtremeLogitsStayFinite) {
  const auto r = softmax_ce_loss(Matrix{{1000, -1000}}, std::vector<int>{0});
  EXPECT_TRUE(std::isfinite(r.loss));
  EXPECT_NEAR(r.loss, 0.0, 1e-12);
  EXPECT_TRUE(all_finite(r.grad));
}

TEST(SoftmaxCe, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(31);
  const auto logits = random_matrix(4, 5, rng, 2.0);
  const std::vector<int> labels{0, 3, 4, 1};
  const auto r = softmax_ce_loss(logits, labels);
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    auto up = logits;
    auto down = logits;
    up.values()[i] += h;
    down.values()[i] -= h;
    const double numeric = (softmax_ce_loss(up, labels).loss - softmax_ce_loss(down, labels).loss) / (2 * h);
    worst = std::max(worst, std::abs(numeric - r.grad.values()[i]) / std::max(1.0, std::abs(numeric)));
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(SoftmaxCe, RejectsBadLabelsAndEmptyBatch) {
  EXPECT_THROW(softmax_ce_loss(Matrix{{0, 0}}, std::vector<int>{2}), LabelError);
  EXPECT_THROW(softmax_ce_loss(Matrix{{0, 0}}, std::vector<int>{-1}), LabelError);
  EXPECT_THROW(softmax_ce_loss(Matrix(0, 2), std::vector<int>{}), BatchError);
}

TEST(Softmax, RowsSumToOne) {
  std::mt19937_64 rng(32);
  const auto p = softmax(random_matrix(6, 4, rng, 30.0));
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double s = 0.0;
    for (double v : p.row(r)) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(SigmoidBce, SymmetricCase) { EXPECT_NEAR(sigmoid_bce_loss(0.0, 1).loss, std::log(2.0), 1e-15); }

TEST(SigmoidBce, ExtremeLogitStaysFinite) {
  const auto r = sigmoid_bce_loss(-1000.0, 0);
  EXPECT_NEAR(r.loss, 0.0, 1e-12);
  EXPECT_TRUE(std::isfinite(r.grad));
}

TEST(SigmoidBce, DerivativeMatchesFiniteDifferences) {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> n(0.0, 3.0);
  const double h = 1e-5;
  for (int i = 0; i < 20; ++i) {
    const double z = n(rng);
    for (int label : {0, 1}) {
      const double numeric = (sigmoid_bce_loss(z + h, label).loss - sigmoid_bce_loss(z - h, label).loss) / (2 * h);
      EXPECT_NEAR(sigmoid_bce_loss(z, label).grad, numeric, 1e-8);
    }
  }
}

TEST(Grl, SignFlip) {
  const Matrix g{{1, -2}, {0.5, 3}};
  EXPECT_EQ(grl_backward(g, 1.0), -1.0 * g);
}

TEST(Grl, ZeroLambdaGivesZero) {
  EXPECT_EQ(max_abs(grl_backward(Matrix{{1, 2}, {3, 4}}, 0.0)), 0.0);
}

TEST(Grl, HandArithmetic) { EXPECT_EQ(grl_backward(Matrix{{2, -4}}, 0.5), (Matrix{{-1, 2}})); }

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  const auto p = random_net({3, 4, 2}, 41);
  std::mt19937_64 rng(42);
  const auto trace = forward(p, random_matrix(5, 3, rng));
  const auto r = backward(p, trace, Matrix(5, 2));
  EXPECT_EQ(r.grads.max_abs(), 0.0);
  EXPECT_EQ(max_abs(r.input_grad), 0.0);
}

TEST(Backward, LinearLayerGradientIsInputTransposeTimesUpstream) {
  const auto p = random_net({3, 2}, 43);
  std::mt19937_64 rng(44);
  const auto x = random_matrix(4, 3, rng);
  const auto u = random_matrix(4, 2, rng);
  const auto trace = forward(p, x);
  const auto r = backward(p, trace, u);
  EXPECT_LE(max_abs_diff(r.grads.layers[0], rada::test::naive_matmul(trace.inputs[0].transpose(), u)), 1e-12);
}

TEST(Backward, MatchesFiniteDifferences) {
  const auto p = random_net({4, 6, 3}, 45);
  std::mt19937_64 rng(46);
  const auto x = random_matrix(5, 4, rng);
  const auto u = random_matrix(5, 3, rng);
  auto loss = [&](const NetworkParams& q) {
    const auto out = forward(q, x).output;
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out.values()[i] * u.values()[i];
    return s;
  };
  const auto analytic = backward(p, forward(p, x), u).grads;
  const auto numeric = finite_diff_grad(loss, p, 1e-5);
  for (std::size_t l = 0; l < p.layers.size(); ++l)
    EXPECT_LE(max_abs_diff(analytic.layers[l], numeric.layers[l]) / std::max(1.0, numeric.max_abs()), 1e-5);
}

TEST(FiniteDiff, ConstantLossGivesZero) {
  const auto p = random_net({2, 3}, 51);
  const auto g = finite_diff_grad([](const NetworkParams&) { return 4.2; }, p, 1e-5);
  EXPECT_EQ(g.max_abs(), 0.0);
}

TEST(FiniteDiff, QuadraticLoss) {
  const auto p = random_net({2, 3, 2}, 52);
  auto sq = [](const NetworkParams& q) {
    double s = 0.0;
    for (const auto& l : q.layers)
      for (double v : l.values()) s += v * v;
    return s;
  };
  const auto g = finite_diff_grad(sq, p, 1e-5);
  for (std::size_t l = 0; l < p.layers.size(); ++l)
    EXPECT_LE(max_abs_diff(g.layers[l], 2.0 * p.layers[l]), 1e-8);
}
