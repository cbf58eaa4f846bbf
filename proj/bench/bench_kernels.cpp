// Serial reference kernels against the OpenMP versions on the flow grid.

#include <benchmark/benchmark.h>

#include "mlfe/flow.hpp"
#include "mlfe/functionals.hpp"
#include "mlfe/measures.hpp"
#include "mlfe/reference.hpp"

namespace {

mlfe::JointDensity density(int points) {
  return mlfe::gaussian_mixture(mlfe::Axis::symmetric(6.0, points), 2, 1.2, 0.25);
}

const mlfe::PotentialPair kPair = mlfe::PotentialPair::quadratic(2.0, 1.5, 2);

void BM_GammaSerial(benchmark::State& st) {
  const auto d = density(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(mlfe::reference::gamma_field(kPair, d));
}
void BM_GammaParallel(benchmark::State& st) {
  const auto d = density(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(mlfe::gamma_field(kPair, d));
}
void BM_FisherSerial(benchmark::State& st) {
  const auto d = density(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(mlfe::reference::i_kappa(kPair, d));
}
void BM_FisherParallel(benchmark::State& st) {
  const auto d = density(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(mlfe::i_kappa(kPair, d));
}
void BM_StepSerial(benchmark::State& st) {
  const auto d = density(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(mlfe::reference::flow_step(kPair, d, 1e-3));
}
void BM_StepParallel(benchmark::State& st) {
  const auto d = density(static_cast<int>(st.range(0)));
  mlfe::FlowConfig cfg;
  cfg.dt = 1e-3;
  mlfe::FlowStepper stepper(kPair, d.axis(), 2, cfg);
  auto state = mlfe::initial_state(kPair, d);
  for (auto _ : st) stepper.advance(state);
}

}  // namespace

BENCHMARK(BM_GammaSerial)->Arg(32)->Arg(64);
BENCHMARK(BM_GammaParallel)->Arg(32)->Arg(64);
BENCHMARK(BM_FisherSerial)->Arg(32)->Arg(64);
BENCHMARK(BM_FisherParallel)->Arg(32)->Arg(64);
BENCHMARK(BM_StepSerial)->Arg(32)->Arg(64);
BENCHMARK(BM_StepParallel)->Arg(32)->Arg(64);

BENCHMARK_MAIN();
