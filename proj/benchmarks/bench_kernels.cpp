#include <random>

#include <benchmark/benchmark.h>

#include "llfilter/adaptive.hpp"
#include "llfilter/examples.hpp"
#include "llfilter/filter.hpp"
#include "llfilter/linalg.hpp"
#include "llfilter/moments.hpp"
#include "llfilter/simulate.hpp"
#include "llfilter/wll.hpp"

namespace {

void BM_Expm(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  llf::Matrix a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
  for (auto _ : state) benchmark::DoNotOptimize(llf::expm(a));
}
BENCHMARK(BM_Expm)->Arg(3)->Arg(10)->Arg(15)->Arg(30);

void BM_MomentStep(benchmark::State& state) {
  const llf::ExampleSetup e = llf::make_example(state.range(0) == 1 ? "ex1" : "ex3");
  const llf::MomentState st{e.params.t0, e.params.x0, e.params.q0};
  const double s = e.params.t0 + 0.25;
  const llf::LinearizationData lin =
      llf::linearize(e.model, s, e.params.x0, llf::Order::kOne);
  const llf::MomentState at_s{s, e.params.x0, e.params.q0};
  for (auto _ : state) benchmark::DoNotOptimize(llf::moment_step(lin, at_s, 1.0 / 64));
}
BENCHMARK(BM_MomentStep)->Arg(1)->Arg(3);

void BM_Filter(benchmark::State& state) {
  const llf::ExampleSetup e = llf::make_example("ex1");
  llf::RngStream rng(1, 0);
  const double t_end = e.obs.times.back();
  const llf::Path path = llf::euler_path(
      e.model, llf::make_path_grid(e.params.t0, t_end, 1e-3), e.params.x0, rng);
  const llf::ObservationSeries data = llf::observe(path, e.obs, rng);
  for (auto _ : state) {
    if (state.range(0) == 0) {
      benchmark::DoNotOptimize(llf::run_ll_filter(
          e.model, e.obs, data, e.init, llf::GridSpec::uniform(1.0 / 64),
          llf::Order::kOne));
    } else {
      benchmark::DoNotOptimize(llf::run_adaptive_filter(
          e.model, e.obs, data, e.init, e.reference, llf::Order::kOne));
    }
  }
}
BENCHMARK(BM_Filter)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
