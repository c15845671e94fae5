#include <benchmark/benchmark.h>

#include <vector>

#include "smart/diffusion.hpp"
#include "smart/gan.hpp"
#include "smart/grid_mixture.hpp"
#include "smart/matrix.hpp"
#include "smart/nn.hpp"
#include "smart/noise_model.hpp"
#include "smart/rng.hpp"
#include "smart/schedule.hpp"

namespace {

using namespace smart;

NoiseSchedule schedule() { return NoiseSchedule::linear(1000, 1e-4, 0.02); }

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Matrix2D a = standard_normal(n, 128, rng);
  const Matrix2D b = standard_normal(128, 128, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256)->Arg(1024);

void BM_MlpForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  Mlp net({2, 128, 128, 2}, rng);
  const Matrix2D x = standard_normal(n, 2, rng);
  const Matrix2D g(n, 2, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.forward(x));
    benchmark::DoNotOptimize(net.backward(g));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_MlpForwardBackward)->Arg(256);

void BM_OraclePredict(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const MixtureOracle oracle(GridMixture::standard(), schedule());
  Rng rng(3);
  const Matrix2D x = uniform(n, 2, -4, 4, rng);
  const std::vector<int> t(n, 50);
  for (auto _ : state) benchmark::DoNotOptimize(oracle.predict(x, t, {}));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_OraclePredict)->Arg(256);

void BM_ScoreRegularity(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto sched = schedule();
  const MixtureOracle oracle(GridMixture::standard(), sched);
  Rng rng(4);
  const Matrix2D g = uniform(n, 2, -4, 4, rng);
  const SmartConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(score_regularity(oracle, sched, g, cfg, rng));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_ScoreRegularity)->Arg(256);

void BM_GanIteration(benchmark::State& state) {
  TrainConfig cfg;
  cfg.smart.freq = 1;
  const auto mix = GridMixture::standard();
  const auto sched = schedule();
  const MixtureOracle oracle(mix, sched);
  Rng init(5);
  GanPair pair = GanPair::create(2, 0, init);
  GanStreams streams = GanStreams::from_seed(0);
  std::size_t it = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(discriminator_step(pair, mix, cfg, it, streams));
    benchmark::DoNotOptimize(generator_step(pair, &oracle, sched, cfg, it, streams));
    ++it;
  }
}
BENCHMARK(BM_GanIteration);

void BM_DdimSample(benchmark::State& state) {
  const auto sched = schedule();
  const MixtureOracle oracle(GridMixture::standard(), sched);
  Rng rng(6);
  for (auto _ : state) benchmark::DoNotOptimize(ddim_sample(oracle, sched, 1024, 50, rng));
}
BENCHMARK(BM_DdimSample);

}  // namespace

BENCHMARK_MAIN();
