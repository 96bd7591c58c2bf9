#include <benchmark/benchmark.h>

#include <random>

#include "tdb/model.hpp"
#include "tdb/regularizer.hpp"
#include "tdb/tensor.hpp"
#include "tdb/trainer.hpp"

using namespace tdb;

namespace {

TdbModel random_model(PresetKind kind, std::size_t dim, std::size_t entities) {
  TdbModel m = make_model(make_preset(kind, dim), dim, entities, 16);
  initialize(m, 1, InitConfig{0.1, 1.0});
  return m;
}

PresetKind kind_arg(int64_t k) { return static_cast<PresetKind>(k); }

void BM_ScoreAllTails(benchmark::State& state) {
  const auto m = random_model(kind_arg(state.range(0)), static_cast<std::size_t>(state.range(1)), 1000);
  std::vector<double> out(m.num_tails());
  std::size_t i = 0;
  for (auto _ : state) {
    score_all_tails(m, i % 1000, i % 16, out);
    benchmark::DoNotOptimize(out.data());
    ++i;
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(out.size()));
  state.SetLabel(std::string(preset_name(kind_arg(state.range(0)))));
}
BENCHMARK(BM_ScoreAllTails)
    ->Args({static_cast<int>(PresetKind::complex), 256})
    ->Args({static_cast<int>(PresetKind::quate), 256})
    ->Args({static_cast<int>(PresetKind::tucker), 16})
    ->Args({static_cast<int>(PresetKind::tucker), 64});

void BM_IvrTriplet(benchmark::State& state) {
  const auto m = random_model(kind_arg(state.range(0)), static_cast<std::size_t>(state.range(1)), 100);
  const auto cfg = RegConfig::ivr_tied(0.01, 0.03, 2.0);
  std::vector<double> gh(m.dim()), gr(m.dim()), gt(m.dim()), gc(m.core().trainable ? m.core().values.size() : 0);
  const TripletGrad grad{gh, gr, gt, gc};
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ivr_triplet(m, {i % 100, i % 16, (i * 7) % 100}, cfg, &grad));
    ++i;
  }
  state.SetLabel(std::string(preset_name(kind_arg(state.range(0)))));
}
BENCHMARK(BM_IvrTriplet)
    ->Args({static_cast<int>(PresetKind::complex), 256})
    ->Args({static_cast<int>(PresetKind::tucker), 16})
    ->Args({static_cast<int>(PresetKind::tucker), 32});

void BM_BatchGradients(benchmark::State& state) {
  const auto m = random_model(PresetKind::tucker, 16, 104);
  std::mt19937_64 rng(2);
  std::vector<Triplet> batch(100);
  for (auto& x : batch) x = {rng() % 104, rng() % 16, rng() % 104};
  TrainConfig cfg;
  cfg.threads = 1;
  if (state.range(0)) cfg.reg = RegConfig::ivr_tied(0.001, 0.003, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(batch_gradients(m, batch, cfg).mean_loss);
  state.SetItemsProcessed(state.iterations() * 100);
  state.SetLabel(state.range(0) ? "tucker16 ivr" : "tucker16 none");
}
BENCHMARK(BM_BatchGradients)->Arg(0)->Arg(1);

void BM_TraceNorm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  DenseTensor3 x({n, 25, n});
  for (double& v : x.values()) v = normal(rng);
  const auto unfolded = unfold(x, 1);
  for (auto _ : state) benchmark::DoNotOptimize(trace_norm(unfolded));
}
BENCHMARK(BM_TraceNorm)->Arg(32)->Arg(104)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
