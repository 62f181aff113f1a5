#include <benchmark/benchmark.h>

#include "robusttransport/experiment.hpp"
#include "robusttransport/filter.hpp"
#include "robusttransport/spectral.hpp"
#include "robusttransport/transport.hpp"

namespace {

rtr::DiscreteMeasure gaussian(int n, int d, std::uint64_t seed) {
  return rtr::sample_gaussian(n, d, seed);
}

void bm_sym_eig(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Eigen::MatrixXd cov = rtr::moments(gaussian(4 * d, d, 1)).covariance;
  for (auto _ : state) benchmark::DoNotOptimize(rtr::sym_eig(cov));
}
BENCHMARK(bm_sym_eig)->Arg(10)->Arg(20)->Arg(40);

void bm_w1_1d(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto a = gaussian(n, 1, 2);
  auto b = gaussian(n, 1, 3);
  for (auto _ : state) benchmark::DoNotOptimize(rtr::w1_1d(a, b));
}
BENCHMARK(bm_w1_1d)->Arg(1000)->Arg(10000);

void bm_wp_exact(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto a = gaussian(n, 3, 4);
  auto b = gaussian(n, 3, 5);
  for (auto _ : state) benchmark::DoNotOptimize(rtr::wp_exact(a, b, 1));
}
BENCHMARK(bm_wp_exact)->Arg(50)->Arg(150);

void bm_filter(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto m = gaussian(n, 20, 6);
  for (auto _ : state) {
    auto cfg = rtr::FilterConfig::practical(0.05, 0.0, 7);
    benchmark::DoNotOptimize(rtr::filter_w2(m, cfg));
  }
}
BENCHMARK(bm_filter)->Arg(1000)->Arg(4000);

}  // namespace

BENCHMARK_MAIN();
