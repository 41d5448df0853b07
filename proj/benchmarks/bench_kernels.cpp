#include <benchmark/benchmark.h>

#include "kanneal/harness.hpp"
#include "kanneal/kernel.hpp"
#include "kanneal/landscape.hpp"
#include "kanneal/rng.hpp"

using namespace kanneal;

namespace {

void BM_NoiseCov(benchmark::State& state) {
  const double dt = std::pow(10.0, -static_cast<double>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(noise_cov(0.7, dt));
  }
}
BENCHMARK(BM_NoiseCov)->DenseRange(0, 6, 2);

template <class Stepper>
void kinetic_steps(benchmark::State& state, const Potential& p) {
  Stepper stepper(p.dims());
  NormalSource rng(1);
  KineticState st{Vec(p.dims(), 0.5), Vec(p.dims(), -0.5), 0.0, 0};
  for (auto _ : state) {
    stepper.step(st, p, 0.3, 0.01, rng);
    benchmark::DoNotOptimize(st.x.data());
  }
  state.SetItemsProcessed(state.iterations());
}

void BM_ExactStepCosine2D(benchmark::State& state) {
  kinetic_steps<ExactSecondOrderStepper>(state, *make_cosine_well(1, 1, 2));
}
BENCHMARK(BM_ExactStepCosine2D);

void BM_EulerStepCosine2D(benchmark::State& state) {
  kinetic_steps<EulerKineticStepper>(state, *make_cosine_well(1, 1, 2));
}
BENCHMARK(BM_EulerStepCosine2D);

void BM_ExactStepDoubleWell(benchmark::State& state) {
  kinetic_steps<ExactSecondOrderStepper>(state, *make_blended_double_well(0.3));
}
BENCHMARK(BM_ExactStepDoubleWell);

void BM_OverdampedStepCosine2D(benchmark::State& state) {
  const auto p = make_cosine_well(1, 1, 2);
  OverdampedStepper stepper(2);
  NormalSource rng(1);
  OverdampedState st{{0.5, -0.5}, 0.0, 0};
  for (auto _ : state) {
    stepper.step(st, *p, 0.3, 0.01, rng);
    benchmark::DoNotOptimize(st.x.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_OverdampedStepCosine2D);

void BM_CriticalDepth(benchmark::State& state) {
  const auto p = state.range(0) == 1 ? make_blended_double_well(0.3) : make_cosine_well(1, 3, 2);
  const GridSpec g = default_depth_grid(*p);
  for (auto _ : state) {
    benchmark::DoNotOptimize(critical_depth(*p, g).e_star);
  }
}
BENCHMARK(BM_CriticalDepth)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_SmallEnsemble(benchmark::State& state) {
  RunConfig cfg;
  cfg.potential = canonical_spec({"cosine_well", 2, {}});
  cfg.horizon = 100.0;
  cfg.replicas = 32;
  cfg.checkpoints = log_spaced_checkpoints(1.0, 100.0, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_ensemble(cfg).checkpoints.back().p_hat);
  }
}
BENCHMARK(BM_SmallEnsemble)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
