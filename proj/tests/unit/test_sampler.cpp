#include <cmath>

#include <gtest/gtest.h>

#include "bcm/sampler.hpp"
#include "params.hpp"
#include "stats.hpp"

namespace {

using namespace bcm;
using fixtures::thick;

struct OneAsset {
  UouParams p = thick();
  double x0 = inverse_map(p, 100.0);
  std::vector<UouParams> models{p};
  std::vector<double> x0s{x0};
  FactorizedCorrelation fac = factorize(identity_correlation(1));
};

std::vector<double> column(const PathBlock& b, std::size_t asset, std::size_t time) {
  std::vector<double> v(b.n_scenarios);
  for (std::size_t m = 0; m < b.n_scenarios; ++m) v[m] = b.at(asset, time, m);
  return v;
}

TEST(Grid, Validation) {
  EXPECT_THROW(TimeGrid({0.0}), std::invalid_argument);
  EXPECT_THROW(TimeGrid({0.1, 0.5}), std::invalid_argument);
  EXPECT_THROW(TimeGrid({0.0, 0.5, 0.5}), std::invalid_argument);
  const auto g = TimeGrid::uniform(2.0, 4);
  EXPECT_EQ(g.steps(), 4u);
  EXPECT_DOUBLE_EQ(g[2], 1.0);
  EXPECT_DOUBLE_EQ(g.maturity(), 2.0);
}

TEST(TerminalTable, RoundTripAgainstQuadratureCdf) {
  OneAsset a;
  const auto t = build_terminal_inverse_cdf(a.p, a.x0, 1.0);
  for (double u : {0.01, 0.5, 0.99}) EXPECT_NEAR(transition_cdf(a.p, 1.0, a.x0, t.inverse(u)), u, 1e-6) << u;
  const auto& v = t.values();
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_GT(v[i], v[i - 1]);
}

TEST(TerminalTable, GaussianKernelMedian) {
  // without the Doob tilt the law is the OU Gaussian, median x0 e^{-lambda T}
  OneAsset a;
  const double x0 = 0.8, t = 1.0;
  const double m = x0 * std::exp(-a.p.lambda() * t);
  const double sd = std::sqrt(-std::expm1(-2 * a.p.lambda() * t) / a.p.kappa());
  const auto tab = build_inverse_cdf([&](double x) { return log_p_x(a.p, t, x0, x); }, m - 12 * sd, m + 12 * sd);
  EXPECT_NEAR(tab.inverse(0.5), m, 1e-6);
  EXPECT_NEAR(tab.inverse(0.975), m + 1.959963984540054 * sd, 1e-6);
}

TEST(TransitionCdf, QuantileInverts) {
  OneAsset a;
  for (double z : {-2.5, -0.3, 0.0, 1.1, 3.0}) {
    const double x = transition_quantile(a.p, 0.5, a.x0, z);
    EXPECT_NEAR(transition_cdf(a.p, 0.5, a.x0, x), normal_cdf(z), 1e-10);
    EXPECT_NEAR(transition_cdf(a.p, 0.5, a.x0, x) + transition_sf(a.p, 0.5, a.x0, x), 1.0, 1e-10);
  }
}

TEST(Terminal, IndependentUnderIdentity) {
  OneAsset a;
  const std::vector<UouParams> models{a.p, a.p};
  const std::vector<double> x0s{a.x0, a.x0};
  const auto fac = factorize(identity_correlation(2));
  const std::vector<TabulatedInverseCdf> tables(2, build_terminal_inverse_cdf(a.p, a.x0, 1.0));
  RngStream rng(1);
  const std::size_t m = 1000000;
  std::vector<double> u(m), v(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto x = sample_terminal(models, x0s, fac, tables, rng);
    u[i] = x[0];
    v[i] = x[1];
  }
  EXPECT_LT(std::abs(stats::sample_correlation(u, v)), 4.0 / std::sqrt(double(m)));
}

TEST(Terminal, MarginalMatchesPriceDensity) {
  OneAsset a;
  const std::vector<TabulatedInverseCdf> tables{build_terminal_inverse_cdf(a.p, a.x0, 1.0)};
  RngStream rng(2);
  std::vector<double> s(100000);
  for (auto& v : s) v = map_f(a.p, sample_terminal(a.models, a.x0s, a.fac, tables, rng)[0]);
  auto cdf = [&](double v) { return transition_cdf(a.p, 1.0, a.x0, inverse_map(a.p, v, a.x0)); };
  EXPECT_GT(stats::ks_pvalue(stats::ks_statistic(s, cdf), s.size()), 0.01);
}

TEST(Terminal, DiscountedMeanIsSpot) {
  OneAsset a;
  const std::vector<TabulatedInverseCdf> tables{build_terminal_inverse_cdf(a.p, a.x0, 1.0)};
  RngStream rng(3);
  const std::size_t m = 1000000;
  double sum = 0, sum2 = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double v = std::exp(-0.05) * map_f(a.p, sample_terminal(a.models, a.x0s, a.fac, tables, rng)[0]);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / m, se = std::sqrt((sum2 / m - mean * mean) / (m - 1));
  EXPECT_NEAR(mean, 100.0, 3 * se);
}

TEST(Bridge, OneStepGridIsTerminalDraw) {
  OneAsset a;
  const std::vector<TabulatedInverseCdf> tables{build_terminal_inverse_cdf(a.p, a.x0, 1.0)};
  const RngStream root(4);
  const auto grid = TimeGrid::uniform(1.0, 1);
  const auto xs = sample_path_bridge(a.models, a.x0s, a.fac, tables, grid, 1000, 1, root, Space::X);
  const auto ss = sample_path_bridge(a.models, a.x0s, a.fac, tables, grid, 1000, 1, root, Space::S);
  RngStream rng = root.split(0);
  for (std::size_t m = 0; m < 1000; ++m) {
    const double x = sample_terminal(a.models, a.x0s, a.fac, tables, rng)[0];
    EXPECT_EQ(xs.at(0, 1, m), x);
    // S-space goes through the tabulated map
    EXPECT_NEAR(ss.at(0, 1, m), map_f(a.p, x), 1e-12 * map_f(a.p, x));
    EXPECT_NEAR(ss.at(0, 0, m), 100.0, 1e-10);
  }
}

TEST(Bridge, TerminalLawDoesNotDependOnGrid) {
  OneAsset a;
  const std::vector<TabulatedInverseCdf> tables{build_terminal_inverse_cdf(a.p, a.x0, 1.0)};
  const auto one = sample_path_bridge(a.models, a.x0s, a.fac, tables, TimeGrid::uniform(1.0, 1), 100000, 1,
                                      RngStream(5), Space::X);
  const auto many = sample_path_bridge(a.models, a.x0s, a.fac, tables, TimeGrid::uniform(1.0, 12), 100000, 1,
                                       RngStream(6), Space::X);
  EXPECT_GT(stats::ks_two_sample_pvalue(column(one, 0, 1), column(many, 0, 12)), 0.01);
}

TEST(Bridge, IntermediateMarginalsExact) {
  OneAsset a;
  const std::vector<TabulatedInverseCdf> tables{build_terminal_inverse_cdf(a.p, a.x0, 1.0)};
  const auto grid = TimeGrid::uniform(1.0, 4);
  const auto b = sample_path_bridge(a.models, a.x0s, a.fac, tables, grid, 50000, 1, RngStream(7), Space::X);
  for (std::size_t j = 1; j <= 4; ++j) {
    auto cdf = [&](double x) { return transition_cdf(a.p, grid[j], a.x0, x); };
    const auto col = column(b, 0, j);
    EXPECT_GT(stats::ks_pvalue(stats::ks_statistic(col, cdf), col.size()), 0.01) << j;
  }
}

TEST(Bridge, MartingaleAlongPath) {
  OneAsset a;
  const std::vector<TabulatedInverseCdf> tables{build_terminal_inverse_cdf(a.p, a.x0, 1.0)};
  const auto grid = TimeGrid::uniform(1.0, 4);
  const auto b = sample_path_bridge(a.models, a.x0s, a.fac, tables, grid, 1000000, 1, RngStream(8));
  for (std::size_t j = 1; j <= 4; ++j) {
    const double df = std::exp(-0.05 * grid[j]);
    double s = 0, s2 = 0;
    for (std::size_t m = 0; m < b.n_scenarios; ++m) {
      const double v = df * b.at(0, j, m);
      s += v;
      s2 += v * v;
    }
    const double n = double(b.n_scenarios), mean = s / n;
    EXPECT_NEAR(mean, 100.0, 3 * std::sqrt((s2 / n - mean * mean) / (n - 1))) << j;
  }
}

TEST(Bridge, AveragesUncorrelatedUnderIdentity) {
  OneAsset a;
  const std::vector<UouParams> models{a.p, a.p};
  const std::vector<double> x0s{a.x0, a.x0};
  const std::vector<TabulatedInverseCdf> tables(2, build_terminal_inverse_cdf(a.p, a.x0, 1.0));
  const std::size_t m = 100000, n = 100;
  const auto b = sample_path_bridge(models, x0s, factorize(identity_correlation(2)), tables, TimeGrid::uniform(1.0, n), m,
                                    1, RngStream(9));
  std::vector<double> a1(m), a2(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) a1[i] += b.at(0, j, i) / n, a2[i] += b.at(1, j, i) / n;
  }
  EXPECT_LT(std::abs(stats::sample_correlation(a1, a2)), 4.0 / std::sqrt(double(m)));
}

TEST(Bridge, BitReproducibleAcrossWorkerCounts) {
  OneAsset a;
  const std::vector<UouParams> models{a.p, fixtures::ibm()};
  const std::vector<double> x0s{a.x0, inverse_map(fixtures::ibm(), 100.0)};
  const std::vector<TabulatedInverseCdf> tables{build_terminal_inverse_cdf(models[0], x0s[0], 1.0),
                                                build_terminal_inverse_cdf(models[1], x0s[1], 1.0)};
  const auto fac = factorize(pair_correlation(0.4));
  const auto grid = TimeGrid::uniform(1.0, 10);
  const auto b1 = sample_path_bridge(models, x0s, fac, tables, grid, 20000, 1, RngStream(10));
  const auto b1again = sample_path_bridge(models, x0s, fac, tables, grid, 20000, 1, RngStream(10));
  const auto b3 = sample_path_bridge(models, x0s, fac, tables, grid, 20000, 3, RngStream(10));
  EXPECT_EQ(b1.values, b1again.values);
  EXPECT_EQ(b1.values, b3.values);
  const auto other = sample_path_bridge(models, x0s, fac, tables, grid, 20000, 1, RngStream(11));
  EXPECT_NE(b1.values, other.values);
}

TEST(Bridge, ExcessClampingFailsLoudly) {
  OneAsset a;
  // a table that stops at the 2% quantiles clamps about 4% of draws
  const double x0 = a.x0;
  const auto narrow = build_inverse_cdf([&](double x) { return log_p_x_rho(a.p, 1.0, x0, x); },
                                        x_window(a.p, 1.0, x0).lo, x_window(a.p, 1.0, x0).hi, 256, 0.02);
  EXPECT_THROW(sample_path_bridge(a.models, a.x0s, a.fac, {narrow}, TimeGrid::uniform(1.0, 2), 20000, 1, RngStream(1)),
               std::runtime_error);
}

TEST(Sequential, OneStepMatchesTerminalTable) {
  OneAsset a;
  const std::vector<TabulatedInverseCdf> tables{build_terminal_inverse_cdf(a.p, a.x0, 1.0)};
  const RngStream root(12);
  const auto seq = sample_path_sequential(a.models, a.x0s, a.fac, TimeGrid::uniform(1.0, 1), 500, 1, root, Space::X);
  RngStream rng = root.split(0);
  for (std::size_t m = 0; m < 500; ++m)
    EXPECT_NEAR(seq.at(0, 1, m), sample_terminal(a.models, a.x0s, a.fac, tables, rng)[0], 1e-6);
}

TEST(Sequential, TerminalLawMatchesBridge) {
  OneAsset a;
  const std::vector<TabulatedInverseCdf> tables{build_terminal_inverse_cdf(a.p, a.x0, 1.0)};
  const auto grid = TimeGrid::uniform(1.0, 2);
  const auto seq = sample_path_sequential(a.models, a.x0s, a.fac, grid, 50000, 1, RngStream(13), Space::X);
  const auto br = sample_path_bridge(a.models, a.x0s, a.fac, tables, grid, 50000, 1, RngStream(14), Space::X);
  EXPECT_GT(stats::ks_two_sample_pvalue(column(seq, 0, 2), column(br, 0, 2)), 0.01);
  EXPECT_GT(stats::ks_two_sample_pvalue(column(seq, 0, 1), column(br, 0, 1)), 0.01);
}

TEST(Sequential, IndependentUnderIdentity) {
  OneAsset a;
  const std::vector<UouParams> models{a.p, a.p};
  const std::vector<double> x0s{a.x0, a.x0};
  const std::size_t m = 20000;
  const auto b = sample_path_sequential(models, x0s, factorize(identity_correlation(2)), TimeGrid::uniform(1.0, 2), m, 1,
                                        RngStream(15));
  EXPECT_LT(std::abs(stats::sample_correlation(column(b, 0, 2), column(b, 1, 2))), 4.0 / std::sqrt(double(m)));
}

TEST(PathCsv, Layout) {
  OneAsset a;
  const std::vector<TabulatedInverseCdf> tables{build_terminal_inverse_cdf(a.p, a.x0, 1.0)};
  const auto grid = TimeGrid::uniform(1.0, 2);
  const auto b = sample_path_bridge(a.models, a.x0s, a.fac, tables, grid, 2, 1, RngStream(1));
  std::ostringstream out;
  write_path_csv(out, b, grid);
  const std::string s = out.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "scenario,time,asset,value");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 2 * 3);
}

}  // namespace
