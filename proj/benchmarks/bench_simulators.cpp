#include "abc/models.hpp"
#include "abc/rng.hpp"

#include <benchmark/benchmark.h>

namespace {

void BM_Philox(benchmark::State& state) {
  abc::RngStream rng(42, 0);
  for (auto _ : state) benchmark::DoNotOptimize(rng());
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Philox);

void BM_StandardNormal(benchmark::State& state) {
  abc::RngStream rng(42, 0);
  for (auto _ : state) benchmark::DoNotOptimize(rng.normal());
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_StandardNormal);

// One dataset per iteration; arg is the observation count.
template <typename M>
void simulate_loop(benchmark::State& state, const M& model, const abc::Vector& theta) {
  std::uint64_t index = 0;
  for (auto _ : state) {
    abc::RngStream rng(7, index++);
    benchmark::DoNotOptimize(model.simulate(theta, rng));
  }
  state.SetItemsProcessed(state.iterations());
}

void BM_GkSimulate(benchmark::State& state) {
  simulate_loop(state, abc::GkModel(static_cast<std::size_t>(state.range(0))), abc::Vector{{3.0, 1.0, 2.0, 0.5}});
}
BENCHMARK(BM_GkSimulate)->Arg(100)->Arg(1000)->Arg(10000);

void BM_Mg1Simulate(benchmark::State& state) {
  simulate_loop(state, abc::Mg1Model(static_cast<std::size_t>(state.range(0))), abc::Vector{{1.0, 5.0, 0.2}});
}
BENCHMARK(BM_Mg1Simulate)->Arg(50)->Arg(500);

void BM_RickerSimulate(benchmark::State& state) {
  simulate_loop(state, abc::RickerModel(), abc::Vector{{3.8, 0.3, 10.0}});
}
BENCHMARK(BM_RickerSimulate);

void BM_LotkaVolterraSimulate(benchmark::State& state) {
  const abc::LotkaVolterraModel model(abc::LvState{100, 100}, 0.1, static_cast<std::size_t>(state.range(0)));
  simulate_loop(state, model, abc::Vector{{0.5, 0.0025, 0.3}});
}
BENCHMARK(BM_LotkaVolterraSimulate)->Arg(10)->Arg(100);

void BM_TbSimulate(benchmark::State& state) {
  simulate_loop(state, abc::TbModel(static_cast<std::size_t>(state.range(0)), 473), abc::Vector{{0.2, 0.05}});
}
BENCHMARK(BM_TbSimulate)->Arg(500)->Arg(2000);

}  // namespace
