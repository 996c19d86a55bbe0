#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "rada/errors.hpp"
#include "rada/trainer.hpp"
#include "support.hpp"

using namespace rada;
using rada::test::TempDir;

namespace {

ModelShape toy_shape() {
  ModelShape s;
  s.input_dim = 16;
  s.classes = 6;
  s.discriminator_branches = 6;
  return s;
}

GeneratedPair toy_pair(double magnitude = 0.5, std::uint64_t seed = 1) {
  GenConfig g;
  g.seed = seed;
  g.shift_magnitude = magnitude;
  return generate_pair(g);
}

NetworkParams small_net(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::vector<std::size_t> widths{3, 4, 2};
  return init_network(widths, rng);
}

Gradients random_grad(const NetworkParams& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto g = Gradients::zeros_like(p);
  for (auto& l : g.layers) l = rada::test::random_matrix(l.rows(), l.cols(), rng);
  return g;
}

}  // namespace

TEST(TrainConfig, ValidationNamesField) {
  TrainConfig cfg;
  cfg.batch_size = 0;
  try {
    cfg.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field, "batch_size");
  }
  TrainConfig neg;
  neg.lr_heads = -1.0;
  EXPECT_THROW(neg.validate(), ConfigError);
}

TEST(TrainConfig, KeyValuesRoundTrip) {
  TrainConfig cfg;
  cfg.epochs = 17;
  cfg.lr_backbone = 0.1 + 0.2;
  cfg.direction = StructureDirection::y_to_d;
  cfg.balanced_sampling = false;
  cfg.seed = 0xfeedfacecafebeefULL;
  EXPECT_EQ(TrainConfig::from_key_values(cfg.to_key_values()), cfg);
}

TEST(TrainConfig, UnknownKeyRejected) {
  EXPECT_THROW(TrainConfig::from_key_values({{"learning_rate", "1"}}), ConfigError);
  EXPECT_THROW(TrainConfig::from_key_values({{"momentum", "fast"}}), ConfigError);
}

TEST(SgdMomentum, NoMomentumNoDecayIsPlainGradientDescent) {
  auto p = small_net(1);
  const auto before = p;
  const auto g = random_grad(p, 2);
  auto v = Gradients::zeros_like(p);
  sgd_momentum_step(p, v, g, 0.1, 0.0, 0.0);
  for (std::size_t l = 0; l < p.layers.size(); ++l)
    for (std::size_t i = 0; i < p.layers[l].size(); ++i)
      EXPECT_EQ(p.layers[l].values()[i], before.layers[l].values()[i] - 0.1 * g.layers[l].values()[i]);
}

TEST(SgdMomentum, WeightDecayIsGradientOfHalfSquaredNorm) {
  auto p = small_net(3);
  const auto before = p;
  const auto g = random_grad(p, 4);
  auto v = Gradients::zeros_like(p);
  const double wd = 0.0005;
  const double lr = 0.05;
  sgd_momentum_step(p, v, g, lr, 0.0, wd);
  for (std::size_t l = 0; l < p.layers.size(); ++l)
    for (std::size_t i = 0; i < p.layers[l].size(); ++i) {
      const double theta = before.layers[l].values()[i];
      const double effective = g.layers[l].values()[i] + wd * theta;  // d/dθ (wd/2) θ²
      EXPECT_NEAR((theta - p.layers[l].values()[i]) / lr, effective, 1e-12);
    }
}

TEST(SgdMomentum, HeavyBallAccumulatesVelocity) {
  auto p = small_net(5);
  const auto start = p;
  const auto g = random_grad(p, 6);
  auto v = Gradients::zeros_like(p);
  sgd_momentum_step(p, v, g, 1.0, 0.9, 0.0);
  sgd_momentum_step(p, v, g, 1.0, 0.9, 0.0);
  for (std::size_t i = 0; i < p.layers[0].size(); ++i) {
    EXPECT_NEAR(v.layers[0].values()[i], 1.9 * g.layers[0].values()[i], 1e-12);
    EXPECT_NEAR(p.layers[0].values()[i], start.layers[0].values()[i] - 2.9 * g.layers[0].values()[i], 1e-12);
  }
}

TEST(EpochOrder, BalancedCountsDifferByAtMostBatchSize) {
  GenConfig g;
  g.per_class = 30;
  auto src = generate_pair(g).source;
  src.labels.resize(src.size() - 25);  // class 5 keeps only 5 samples
  src.features = [&] {
    Matrix m(src.labels.size(), src.feature_dim());
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = src.features(r, c);
    return m;
  }();
  std::mt19937_64 rng(7);
  const auto order = epoch_order(src, true, rng);
  ASSERT_EQ(order.size(), src.size());
  std::vector<std::size_t> counts(src.classes, 0);
  for (auto i : order) ++counts[static_cast<std::size_t>(src.labels[i])];
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  EXPECT_LE(*hi - *lo, 1u);
}

TEST(EpochOrder, UnbalancedIsAPermutation) {
  const auto src = toy_pair().source;
  std::mt19937_64 rng(8);
  auto order = epoch_order(src, false, rng);
  std::sort(order.begin(), order.end());
  for (std::size_t i = 0; i < order.size(); ++i) EXPECT_EQ(order[i], i);
}

TEST(Fit, ZeroEpochsIsNoOp) {
  const auto pair = toy_pair();
  const auto model = make_model(toy_shape(), 1);
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto r = fit(model, pair.source, pair.target, cfg);
  EXPECT_EQ(r.state.model, model);
  EXPECT_TRUE(r.report.epochs.empty());
}

TEST(Fit, SameSeedIsBitIdentical) {
  const auto pair = toy_pair();
  const auto model = make_model(toy_shape(), 2);
  TrainConfig cfg;
  cfg.epochs = 4;
  const auto a = fit(model, pair.source, pair.target, cfg);
  const auto b = fit(model, pair.source, pair.target, cfg);
  EXPECT_EQ(a.report, b.report);
  EXPECT_EQ(a.state, b.state);
}

TEST(Fit, ReportHasOneFiniteRecordPerEpoch) {
  const auto pair = toy_pair();
  TrainConfig cfg;
  cfg.epochs = 5;
  const auto r = fit(make_model(toy_shape(), 3), pair.source, pair.target, cfg);
  ASSERT_EQ(r.report.epochs.size(), 5u);
  for (std::size_t e = 0; e < 5; ++e) {
    const auto& rec = r.report.epochs[e];
    EXPECT_EQ(rec.epoch, e);
    EXPECT_TRUE(std::isfinite(rec.label_loss) && std::isfinite(rec.domain_loss));
    ASSERT_TRUE(rec.kl_dy && rec.kl_yd && rec.structure_loss && rec.target_accuracy);
    EXPECT_GE(*rec.kl_dy, 0.0);
    EXPECT_DOUBLE_EQ(rec.lambda_adv, lambda_adv_schedule(e / 5.0));
    EXPECT_DOUBLE_EQ(rec.lr_heads, lr_schedule(cfg.lr_heads, e / 5.0, 10.0, 0.75));
  }
}

TEST(Fit, UnlabeledTargetOmitsTargetAccuracy) {
  const auto pair = toy_pair();
  TrainConfig cfg;
  cfg.epochs = 1;
  const auto r = fit(make_model(toy_shape(), 4), pair.source, pair.target.without_labels(), cfg);
  EXPECT_FALSE(r.report.epochs.front().target_accuracy.has_value());
}

TEST(Fit, TargetLabelsDoNotInfluenceTraining) {
  const auto pair = toy_pair();
  TrainConfig cfg;
  cfg.epochs = 3;
  const auto model = make_model(toy_shape(), 5);
  const auto a = fit(model, pair.source, pair.target, cfg);
  const auto b = fit(model, pair.source, pair.target.without_labels(), cfg);
  EXPECT_EQ(a.state, b.state);
}

TEST(Fit, LearnsSeparableSourceWithAdversaryActive) {
  const auto pair = toy_pair(0.0);
  TrainConfig cfg;
  cfg.epochs = 50;
  const auto r = fit(make_model(toy_shape(), 6), pair.source, pair.target, cfg);
  EXPECT_GT(r.report.epochs.back().lambda_adv, 0.9);
  EXPECT_GE(r.report.epochs.back().source_accuracy, 0.95);
}

TEST(Fit, StopAndResumeMatchesUninterruptedRun) {
  const auto pair = toy_pair();
  TrainConfig cfg;
  cfg.epochs = 4;
  const auto model = make_model(toy_shape(), 7);
  const auto full = fit(model, pair.source, pair.target, cfg);
  const auto head = fit(TrainState::fresh(model), pair.source, pair.target, cfg, 2);
  EXPECT_EQ(head.state.epochs_completed, 2u);
  const auto tail = fit(head.state, pair.source, pair.target, cfg);
  EXPECT_EQ(tail.state, full.state);
  TrainReport joined = head.report;
  joined.epochs.insert(joined.epochs.end(), tail.report.epochs.begin(), tail.report.epochs.end());
  EXPECT_EQ(joined, full.report);
}

TEST(Fit, RejectsMismatchedData) {
  const auto pair = toy_pair();
  ModelShape wrong = toy_shape();
  wrong.input_dim = 8;
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(fit(make_model(wrong, 1), pair.source, pair.target, cfg), DimensionError);
  EXPECT_THROW(fit(make_model(toy_shape(), 1), pair.source.without_labels(), pair.target, cfg), LabelError);
}

TEST(Fit, DivergenceIsReported) {
  const auto pair = toy_pair();
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.lr_backbone = 1e300;
  cfg.lr_heads = 1e300;
  EXPECT_THROW(fit(make_model(toy_shape(), 8), pair.source, pair.target, cfg), DivergenceError);
}

TEST(GradCheck, ReducedCasesAreTight) {
  const auto pair = toy_pair();
  const auto model = make_model(toy_shape(), 9);
  SourceBatch sb{Matrix(8, 16), std::vector<int>(8)};
  TargetBatch tb{Matrix(8, 16)};
  for (std::size_t i = 0; i < 8; ++i) {
    const auto s = pair.source.features.row(i * 70);
    const auto t = pair.target.features.row(i * 70 + 3);
    std::copy(s.begin(), s.end(), sb.x.row(i).begin());
    std::copy(t.begin(), t.end(), tb.x.row(i).begin());
    sb.labels[i] = pair.source.labels[i * 70];
  }
  ObjectiveSettings plain;
  plain.lambda_adv = 0.0;
  plain.lambda_r = 0.0;
  EXPECT_LE(grad_check(model, sb, tb, plain).worst(), 1e-5);

  ObjectiveSettings reg = plain;
  reg.lambda_r = 0.01;
  const auto r = grad_check(model, sb, tb, reg);
  EXPECT_LE(r.label_error, 1e-4);
  EXPECT_LE(r.discriminator_error, 1e-4);

  ObjectiveSettings full;
  const auto f = grad_check(model, sb, tb, full);
  EXPECT_LE(f.feature_error, 1e-4);
  EXPECT_LE(f.label_error, 1e-4);
  EXPECT_LE(f.discriminator_error, 1e-4);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto pair = toy_pair();
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.lr_backbone = 0.1 + 0.2;
  const auto r = fit(make_model(toy_shape(), 10), pair.source, pair.target, cfg);
  TempDir dir("ckpt");
  save_checkpoint(dir / "c.txt", r.state, cfg);
  const auto back = load_checkpoint(dir / "c.txt");
  EXPECT_EQ(back.state, r.state);
  EXPECT_EQ(back.config, cfg);
}

TEST(Checkpoint, ResumedTrainingMatchesUninterrupted) {
  const auto pair = toy_pair();
  TrainConfig cfg;
  cfg.epochs = 4;
  const auto model = make_model(toy_shape(), 11);
  const auto full = fit(model, pair.source, pair.target, cfg);
  const auto head = fit(TrainState::fresh(model), pair.source, pair.target, cfg, 2);
  TempDir dir("resume");
  save_checkpoint(dir / "c.txt", head.state, cfg);
  const auto ck = load_checkpoint(dir / "c.txt");
  const auto tail = fit(ck.state, pair.source, pair.target, ck.config);
  EXPECT_EQ(tail.state, full.state);
}

TEST(Checkpoint, CorruptFilesAreFormatErrors) {
  TempDir dir("ckpt-bad");
  std::ofstream(dir / "a.txt") << "not a checkpoint\n";
  EXPECT_THROW(load_checkpoint(dir / "a.txt"), FormatError);
  std::ofstream(dir / "b.txt") << "rada-checkpoint 9\n";
  EXPECT_THROW(load_checkpoint(dir / "b.txt"), FormatError);
  EXPECT_THROW(load_checkpoint(dir / "missing.txt"), FormatError);

  const auto model = make_model(toy_shape(), 12);
  save_checkpoint(dir / "c.txt", TrainState::fresh(model), TrainConfig{});
  std::string text;
  {
    std::ifstream in(dir / "c.txt");
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  std::ofstream(dir / "d.txt") << text.substr(0, text.size() / 2);
  EXPECT_THROW(load_checkpoint(dir / "d.txt"), FormatError);
}
