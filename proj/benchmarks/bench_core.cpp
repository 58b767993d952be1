#include <benchmark/benchmark.h>

#include "mpcq/holonomy.hpp"
#include "mpcq/scenarios.hpp"

using namespace mpcq;

namespace {

void BM_DetC(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::vector<double> s0;
  for (int j = 0; j < n; ++j) s0.push_back(0.5 * (j + 1));
  const Mat g = polar_frame(s0, 0.7);
  for (auto _ : state) benchmark::DoNotOptimize(det_c(g));
}
BENCHMARK(BM_DetC)->DenseRange(1, 4);

void BM_AdaptedFrame(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto sys = harmonic(n);
  const Vec x = level_set_seeds(sys, 1.3, {n + 1, 64.0, 4096}).back();
  const Vec grad = sys.gradient(x), xi = hamiltonian_vector_field(sys, x);
  const auto conv = CoisotropicConvention::standard(n);
  const Mat ref = default_reference(n);
  for (auto _ : state) benchmark::DoNotOptimize(adapted_frame_build(grad, xi, conv, ref));
}
BENCHMARK(BM_AdaptedFrame)->DenseRange(1, 4);

void BM_DetectOrbit(benchmark::State& state) {
  const auto sys = product_hamiltonian(2.5);
  const Vec s0 = level_set_seeds(sys, 0.0)[2];
  for (auto _ : state) benchmark::DoNotOptimize(detect_closed_orbit(sys, s0));
}
BENCHMARK(BM_DetectOrbit)->Unit(benchmark::kMillisecond);

void BM_EvaluateOrbit(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto sys = harmonic(n);
  const auto model = PrequantizationModel::make(sys, Mode::MPC);
  const auto orbit = std::get<ClosedOrbit>(detect_closed_orbit(sys, level_set_seeds(sys, 1.3)[n]));
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_orbit(model, orbit));
}
BENCHMARK(BM_EvaluateOrbit)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

void BM_IsQuantized(benchmark::State& state) {
  const auto model = PrequantizationModel::make(harmonic(2), Mode::MPC);
  for (auto _ : state) benchmark::DoNotOptimize(is_quantized(model, 2.0));
}
BENCHMARK(BM_IsQuantized)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
