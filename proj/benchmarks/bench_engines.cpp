#include "abc/engines.hpp"
#include "abc/models.hpp"
#include "abc/summaries.hpp"

#include <benchmark/benchmark.h>

#include <memory>

namespace {

abc::AbcProblem normal_mean_problem() {
  abc::AbcProblem problem;
  problem.model = std::make_shared<abc::NormalMeanModel>(1.0, 10);
  problem.summary = std::make_shared<abc::MeanMap>();
  problem.s_obs = abc::Vector{{0.3}};
  problem.kernel = abc::DensityKernel::uniform(1, 0.1);
  return problem;
}

// Proposals per second; arg is the thread count.
void BM_ImportanceNormalMean(benchmark::State& state) {
  const abc::AbcProblem problem = normal_mean_problem();
  const abc::RunOptions options{1, static_cast<int>(state.range(0)), "bench"};
  constexpr std::size_t n = 100000;
  for (auto _ : state) benchmark::DoNotOptimize(abc::abc_importance(problem, n, options));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ImportanceNormalMean)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_McmcNormalMean(benchmark::State& state) {
  const abc::AbcProblem problem = normal_mean_problem();
  abc::McmcConfig config;
  config.length = 100000;
  config.theta0 = abc::Vector{{0.3}};
  config.proposal_cov = abc::Matrix::Constant(1, 1, 0.25);
  for (auto _ : state) benchmark::DoNotOptimize(abc::abc_mcmc(problem, config, abc::RunOptions{1, 1, "bench"}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(config.length));
}
BENCHMARK(BM_McmcNormalMean)->Unit(benchmark::kMillisecond);

}  // namespace
