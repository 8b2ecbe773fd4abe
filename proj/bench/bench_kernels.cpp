// Serial reference kernels against their OpenMP counterparts on simulated data.
#include <benchmark/benchmark.h>

#include <map>
#include <numeric>

#include "latent_itr/kernels.hpp"
#include "latent_itr/simulator.hpp"
#include "latent_itr/trainer.hpp"

using namespace litr;

namespace {

struct Fixture {
  Dataset ds;
  ModelParams params;
  LatentAssignment latents;
  std::vector<std::size_t> all;
};

const Fixture& fixture(std::size_t n) {
  static std::map<std::size_t, Fixture> cache;
  auto [it, fresh] = cache.try_emplace(n);
  if (fresh) {
    SimConfig sim;
    sim.n = n;
    it->second.ds = simulate(sim).dataset;
    it->second.params = initialize_params(it->second.ds, TrainingConfig{});
    it->second.latents = LatentAssignment(n, 3);
    search_sweep_serial(it->second.params, it->second.ds, it->second.latents);
    it->second.all.resize(n);
    std::iota(it->second.all.begin(), it->second.all.end(), 0);
  }
  return it->second;
}

template <bool kParallel>
void BM_SearchSweep(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  LatentAssignment latents(f.ds.size(), 3);
  for (auto _ : state) {
    if constexpr (kParallel) {
      search_sweep(f.params, f.ds, latents);
    } else {
      search_sweep_serial(f.params, f.ds, latents);
    }
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool kParallel>
void BM_BatchGradient(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  auto tape = GradientTape::zeros_like(f.params);
  for (auto _ : state) {
    const double loss = kParallel ? batch_gradient(f.params, f.ds, f.latents, f.all, tape)
                                  : batch_gradient_serial(f.params, f.ds, f.latents, f.all, tape);
    benchmark::DoNotOptimize(loss);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool kParallel>
void BM_TotalObjective(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    const double v = kParallel ? total_objective(f.params, f.latents, f.ds)
                               : total_objective_serial(f.params, f.latents, f.ds);
    benchmark::DoNotOptimize(v);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_SearchSweep<false>)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SearchSweep<true>)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradient<false>)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradient<true>)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TotalObjective<false>)->Arg(500)->Arg(2000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_TotalObjective<true>)->Arg(500)->Arg(2000)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
