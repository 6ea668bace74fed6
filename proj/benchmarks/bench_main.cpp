#include <benchmark/benchmark.h>

#include <vector>

#include "dynbound/integrator.hpp"
#include "dynbound/lyapunov.hpp"
#include "dynbound/poincare.hpp"
#include "dynbound/upo.hpp"

using namespace dynbound;

namespace {

const PolyField& lorenz() {
  static const PolyField f = parse_system("dx/dt = 10*(y - x)\ndy/dt = x*(28 - z) - y\ndz/dt = x*y - 2.6666666666666665*z");
  return f;
}

void BM_FieldEvaluate(benchmark::State& state) {
  const std::vector<double> x{1.0, 2.0, 3.0};
  std::vector<double> out(3);
  for (auto _ : state) {
    lorenz().evaluate_into(x, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_FieldEvaluate);

void BM_FieldJacobian(benchmark::State& state) {
  const std::vector<double> x{1.0, 2.0, 3.0};
  std::vector<double> out(9);
  for (auto _ : state) {
    lorenz().jacobian_into(x, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_FieldJacobian);

void BM_IntegrateLorenz(benchmark::State& state) {
  IntegrationOptions opts;
  opts.abs_tol = opts.rel_tol = 1e-10;
  for (auto _ : state) {
    auto traj = integrate(lorenz(), std::vector<double>{1, 1, 1}, 0.0, static_cast<double>(state.range(0)), opts);
    benchmark::DoNotOptimize(traj.back().x.data());
  }
}
BENCHMARK(BM_IntegrateLorenz)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_FirstReturn(benchmark::State& state) {
  const auto plane = SectionPlane::parse("0,0,27/0,0,1/both");
  const auto start = settle_onto_section(lorenz(), plane, std::vector<double>{1, 1, 1}, 50.0);
  for (auto _ : state) {
    auto r = first_return(lorenz(), plane, start);
    benchmark::DoNotOptimize(r.return_time);
  }
}
BENCHMARK(BM_FirstReturn)->Unit(benchmark::kMicrosecond);

void BM_LyapunovShort(benchmark::State& state) {
  for (auto _ : state) {
    auto r = lyapunov_spectrum(lorenz(), std::vector<double>{1, 1, 1}, 10.0, 100.0, 0.5);
    benchmark::DoNotOptimize(r.exponents.data());
  }
}
BENCHMARK(BM_LyapunovShort)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
