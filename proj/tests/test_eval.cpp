#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "rada/errors.hpp"
#include "rada/eval.hpp"
#include "support.hpp"

using namespace rada;
using rada::test::TempDir;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RadaModel toy_model(std::uint64_t seed, std::size_t branches = 6) {
  ModelShape s;
  s.discriminator_branches = branches;
  return make_model(s, seed);
}

}  // namespace

TEST(Accuracy, PerfectWrongAndHalf) {
  const std::vector<int> labels{0, 1, 2, 0, 1, 2, 0, 1, 2, 0};
  EXPECT_EQ(accuracy(labels, labels), 1.0);
  std::vector<int> wrong(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) wrong[i] = (labels[i] + 1) % 3;
  EXPECT_EQ(accuracy(wrong, labels), 0.0);
  std::vector<int> half = labels;
  for (std::size_t i = 0; i < 5; ++i) half[i] = wrong[i];
  EXPECT_EQ(accuracy(half, labels), 0.5);
}

TEST(Accuracy, UnlabeledDatasetIsRejected) {
  GenConfig g;
  const auto pair = generate_pair(g);
  EXPECT_THROW(accuracy(toy_model(1), pair.target.without_labels()), EvalError);
}

TEST(Accuracy, ModelOverloadAgreesWithPredictions) {
  GenConfig g;
  const auto pair = generate_pair(g);
  const auto model = toy_model(2);
  EXPECT_EQ(accuracy(model, pair.source), accuracy(predict(model, pair.source.features), pair.source.labels));
}

TEST(Confusion, PerfectPredictorIsDiagonal) {
  const std::vector<int> labels{0, 1, 2, 2, 1};
  const auto cm = confusion(labels, labels, 3);
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t p = 0; p < 3; ++p)
      if (t != p) EXPECT_EQ(cm.at(t, p), 0u);
  EXPECT_EQ(cm.diagonal_sum(), labels.size());
}

TEST(Confusion, ConstantPredictorFillsOneColumn) {
  const std::vector<int> labels{0, 1, 2, 2, 1};
  const std::vector<int> zeros(labels.size(), 0);
  const auto cm = confusion(zeros, labels, 3);
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_EQ(cm.at(t, 1), 0u);
    EXPECT_EQ(cm.at(t, 2), 0u);
  }
  EXPECT_EQ(cm.total(), labels.size());
}

TEST(Confusion, RowSumsAreClassCounts) {
  std::mt19937_64 rng(91);
  std::uniform_int_distribution<int> cls(0, 4);
  std::vector<int> labels(200);
  std::vector<int> preds(200);
  std::vector<std::size_t> counts(5, 0);
  for (std::size_t i = 0; i < 200; ++i) {
    labels[i] = cls(rng);
    preds[i] = cls(rng);
    ++counts[static_cast<std::size_t>(labels[i])];
  }
  EXPECT_EQ(confusion(preds, labels, 5).row_sums(), counts);
}

TEST(Pad, FormulaCases) {
  EXPECT_EQ(pad_from_error(0.5).d_a, 0.0);
  EXPECT_EQ(pad_from_error(0.0).d_a, 2.0);
  EXPECT_EQ(pad_from_error(0.25).d_a, 1.0);
  EXPECT_EQ(pad_from_error(0.7).epsilon, 0.5);
}

TEST(Pad, SeparableDomainsApproachTwo) {
  std::mt19937_64 rng(92);
  auto s = rada::test::random_matrix(60, 3, rng);
  auto t = rada::test::random_matrix(60, 3, rng);
  for (std::size_t r = 0; r < t.rows(); ++r) t(r, 0) += 20.0;
  const auto pad = proxy_a_distance(s, t);
  EXPECT_EQ(pad.epsilon, 0.0);
  EXPECT_EQ(pad.d_a, 2.0);
}

TEST(Pad, IdenticalDistributionsAreCloseToZero) {
  std::mt19937_64 rng(93);
  const auto s = rada::test::random_matrix(300, 4, rng);
  const auto t = rada::test::random_matrix(300, 4, rng);
  const auto pad = proxy_a_distance(s, t);
  EXPECT_LT(pad.d_a, 0.4);
  EXPECT_EQ(pad.d_a, 2.0 * (1.0 - 2.0 * pad.epsilon));
}

TEST(Pad, TooFewSamplesPerFoldThrows) {
  EXPECT_THROW(proxy_a_distance(Matrix(2, 2), Matrix(2, 2), 5), EvalError);
  EXPECT_THROW(proxy_a_distance(Matrix(4, 2), Matrix(4, 3)), EvalError);
}

TEST(StructureReport, EqualWeightsGiveZeroKl) {
  ModelShape s;
  s.discriminator_hidden = s.label_hidden.back();
  auto model = make_model(s, 3);
  model.g_d.layers.back() = model.g_y.layers.back();
  const auto r = structure_report(model);
  EXPECT_NEAR(r.kl_dy, 0.0, 1e-10);
  EXPECT_NEAR(r.kl_yd, 0.0, 1e-10);
  EXPECT_EQ(r.rho_y, r.rho_d);
}

TEST(StructureReport, FreshModelIsFiniteWithoutShrinkage) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = structure_report(toy_model(seed));
    EXPECT_TRUE(std::isfinite(r.kl_dy) && std::isfinite(r.kl_yd));
    EXPECT_TRUE(all_finite(r.rho_y) && all_finite(r.rho_d));
    EXPECT_EQ(r.omega_y.shrink_used, 0.0);
    EXPECT_EQ(r.omega_d.shrink_used, 0.0);
  }
}

TEST(StructureReport, SingleBranchIsRejected) { EXPECT_THROW(structure_report(toy_model(4, 1)), EvalError); }

TEST(Heatmap, TrianglesComeFromEachSide) {
  const Matrix y{{1, 0.2, 0.3}, {0.2, 1, 0.4}, {0.3, 0.4, 1}};
  const Matrix d{{1, -0.2, -0.3}, {-0.2, 1, -0.4}, {-0.3, -0.4, 1}};
  const auto h = combined_heatmap(y, d);
  EXPECT_EQ(h(0, 2), 0.3);
  EXPECT_EQ(h(2, 0), -0.3);
  EXPECT_EQ(h(1, 1), 1.0);
}

TEST(Csv, ReportUsesNaForMissingValues) {
  TempDir dir("eval");
  TrainReport report;
  EpochRecord e;
  e.epoch = 3;
  e.source_accuracy = 0.5;
  report.epochs.push_back(e);
  write_report_csv(dir / "r.csv", report);
  write_report_csv(dir / "r.csv", report, true);
  const auto text = read_file(dir / "r.csv");
  EXPECT_EQ(text,
            "epoch,label_loss,domain_loss,structure_loss,kl_dy,kl_yd,lambda_adv,lr_backbone,lr_heads,"
            "source_accuracy,target_accuracy,shrink_events\n"
            "3,0,0,NA,NA,NA,0,0,0,0.5,NA,0\n"
            "3,0,0,NA,NA,NA,0,0,0,0.5,NA,0\n");
}

TEST(Csv, MatrixAndConfusion) {
  TempDir dir("eval");
  write_matrix_csv(dir / "m.csv", Matrix{{1, 0.5}, {-2, 0.1}});
  EXPECT_EQ(read_file(dir / "m.csv"), "1,0.5\n-2,0.10000000000000001\n");
  const std::vector<int> labels{0, 1, 1};
  write_confusion_csv(dir / "c.csv", confusion(std::vector<int>{0, 0, 1}, labels, 2));
  EXPECT_EQ(read_file(dir / "c.csv"), "1,0\n1,1\n");
}
