#include <benchmark/benchmark.h>

#include <random>

#include "rada/adversarial.hpp"
#include "rada/datagen.hpp"
#include "rada/linalg.hpp"
#include "rada/structure.hpp"

using namespace rada;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (auto& v : m.values()) v = n(rng);
  return m;
}

Matrix random_pd(std::size_t k, std::uint64_t seed) {
  const auto a = random_matrix(k + 4, k, seed);
  return matmul_tn(a, a) + 1e-3 * Matrix::identity(k);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, n, 1);
  const auto b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(8, 128)->Complexity();

void BM_Cholesky(benchmark::State& state) {
  const auto m = random_pd(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(cholesky(m));
}
BENCHMARK(BM_Cholesky)->RangeMultiplier(2)->Range(4, 64);

void BM_PrecisionFromWeights(benchmark::State& state) {
  const auto w = random_matrix(64, static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(precision_from_weights(w));
}
BENCHMARK(BM_PrecisionFromWeights)->Arg(3)->Arg(6)->Arg(12);

void BM_PrecisionOracle(benchmark::State& state) {
  const auto w = random_matrix(64, static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(precision_oracle(w));
}
BENCHMARK(BM_PrecisionOracle)->Arg(3)->Arg(6)->Arg(12)->Unit(benchmark::kMicrosecond);

void BM_StructureLoss(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto wy = random_matrix(32, k, 6);
  const auto wd = random_matrix(64, k, 7);
  for (auto _ : state) benchmark::DoNotOptimize(structure_loss(wy, wd, StructureDirection::d_to_y));
}
BENCHMARK(BM_StructureLoss)->Arg(6)->Arg(12);

void BM_TotalObjective(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  GenConfig g;
  const auto pair = generate_pair(g);
  const auto model = make_model(ModelShape{}, 8);
  SourceBatch sb{Matrix(rows, g.features), std::vector<int>(rows)};
  TargetBatch tb{Matrix(rows, g.features)};
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t f = 0; f < g.features; ++f) {
      sb.x(i, f) = pair.source.features(i, f);
      tb.x(i, f) = pair.target.features(i, f);
    }
    sb.labels[i] = pair.source.labels[i];
  }
  ObjectiveSettings s;
  s.lambda_adv = 0.5;
  s.lambda_r = 0.01;
  if (state.range(1))
    for (auto _ : state) benchmark::DoNotOptimize(objective_value(model, sb, tb, s));
  else
    for (auto _ : state) benchmark::DoNotOptimize(total_objective(model, sb, tb, s));
}
BENCHMARK(BM_TotalObjective)->ArgNames({"rows", "value_only"})->ArgsProduct({{12, 64}, {0, 1}})->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
