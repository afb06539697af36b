#include <benchmark/benchmark.h>

#include <cmath>

#include "qloc/fisher.hpp"
#include "qloc/quadrature.hpp"

namespace {

using qloc::quad::Execution;

// Airy-kernel overlap of the disk with a displaced point, the dominant cost in
// the direct-imaging and rho_B integrals.
double kernel(double x, double y, double xp, double yp) {
  return qloc::psf(std::hypot(x - xp, y - yp));
}

void BM_Disk(benchmark::State& state, Execution exec) {
  auto spec = qloc::quad::default_spec_2d();
  spec.rel_tol = 1e-10;
  const double R = 1.5;
  for (auto _ : state) {
    auto r = qloc::quad::integrate_disk(
        [](double x, double y) { return kernel(x, y, 0.4, -0.2); }, R, spec, exec);
    benchmark::DoNotOptimize(r.value);
  }
}

void BM_DiskPair(benchmark::State& state, Execution exec) {
  auto spec = qloc::quad::default_spec_4d();
  spec.rel_tol = 1e-4;
  const double R = 0.8;
  for (auto _ : state) {
    auto r = qloc::quad::integrate_disk_pair(
        [](double x, double y, double xp, double yp) {
          const double k = kernel(x, y, xp, yp);
          return k * k;
        },
        R, spec, exec);
    benchmark::DoNotOptimize(r.value);
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_Disk, serial, Execution::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Disk, parallel, Execution::Parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_DiskPair, serial, Execution::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_DiskPair, parallel, Execution::Parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
