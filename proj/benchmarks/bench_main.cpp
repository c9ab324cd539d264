#include <benchmark/benchmark.h>

#include <vector>

#include "bcm/pricer.hpp"
#include "bcm/sampler.hpp"
#include "bcm/specfun.hpp"
#include "bcm/uou.hpp"

using namespace bcm;

namespace {

const UouParams kThick = UouParams::from_fit(0.02, 0.5, 100, 1, 0.05);

void BM_PcfD(benchmark::State& st) {
  double z = -3.0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(pcf_d(-1.7, z));
    z = z > 6.0 ? -3.0 : z + 0.01;
  }
}
BENCHMARK(BM_PcfD);

void BM_LogPxRho(benchmark::State& st) {
  double x = -1.0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(log_p_x_rho(kThick, 0.01, 0.1, x));
    x = x > 1.0 ? -1.0 : x + 0.001;
  }
}
BENCHMARK(BM_LogPxRho);

void BM_InverseMap(benchmark::State& st) {
  double s = 60.0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(inverse_map(kThick, s));
    s = s > 160.0 ? 60.0 : s + 0.37;
  }
}
BENCHMARK(BM_InverseMap);

void BM_TransitionCdf(benchmark::State& st) {
  const double x0 = inverse_map(kThick, 100.0);
  double x = x0 - 0.5;
  for (auto _ : st) {
    benchmark::DoNotOptimize(transition_cdf(kThick, 1.0, x0, x));
    x = x > x0 + 0.5 ? x0 - 0.5 : x + 0.01;
  }
}
BENCHMARK(BM_TransitionCdf);

void BM_EuropeanQuadrature(benchmark::State& st) {
  const double kinks[1] = {100.0};
  for (auto _ : st)
    benchmark::DoNotOptimize(
        price_european_quadrature(kThick, [](double s) { return s > 100.0 ? s - 100.0 : 0.0; }, 100.0, 1.0, {}, kinks));
}
BENCHMARK(BM_EuropeanQuadrature);

void BM_TerminalTable(benchmark::State& st) {
  const double x0 = inverse_map(kThick, 100.0);
  for (auto _ : st) benchmark::DoNotOptimize(build_terminal_inverse_cdf(kThick, x0, 1.0));
}
BENCHMARK(BM_TerminalTable)->Unit(benchmark::kMillisecond);

// bridge paths for n assets, 10 000 scenarios on 100 steps
void BM_BridgePaths(benchmark::State& st) {
  const std::size_t n = std::size_t(st.range(0));
  const std::vector<UouParams> ms(n, kThick);
  const std::vector<double> x0(n, inverse_map(kThick, 100.0));
  const auto fac = factorize(random_correlation_gram(n, 3));
  std::vector<TabulatedInverseCdf> tables;
  for (std::size_t k = 0; k < n; ++k) tables.push_back(build_terminal_inverse_cdf(kThick, x0[k], 1.0));
  const auto grid = TimeGrid::uniform(1.0, 100);
  for (auto _ : st) benchmark::DoNotOptimize(sample_path_bridge(ms, x0, fac, tables, grid, 10000, 1, RngStream(1)));
  st.SetItemsProcessed(st.iterations() * 10000);
}
BENCHMARK(BM_BridgePaths)->Arg(2)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
