#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bcm/specfun.hpp"
#include "bcm/uou.hpp"
#include "density.hpp"
#include "params.hpp"

namespace {

using namespace bcm;
using fixtures::ibm;
using fixtures::thick;
using fixtures::thin;

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

using fixtures::integrate_ps;

TEST(Params, DerivedQuantities) {
  const auto p = thick();
  EXPECT_NEAR(p.lambda(), 0.04, 1e-15);
  EXPECT_NEAR(p.kappa(), 1.0, 1e-14);
  EXPECT_NEAR(p.upsilon(), 0.5, 1e-15);
  EXPECT_THROW(UouParams::from_fit(0.02, 6.0, 100, 1, 0.05), std::invalid_argument);
  EXPECT_THROW(UouParams::from_fit(0.02, 0.5, 100, 30, 0.05), std::invalid_argument);
  EXPECT_THROW(UouParams(0.04, 0.2, -1.0, 0.02, 0.05), std::invalid_argument);
}

TEST(FundamentalSolutions, DegenerateOrder) {
  const auto p = thick();
  for (double x : {-3.0, -1.0, 0.0, 0.5, 2.0}) EXPECT_NEAR(phi_minus(p, 1e-12 * p.lambda(), x), 1.0, 1e-10);
}

TEST(FundamentalSolutions, ReflectionAndMonotonicity) {
  const auto p = UouParams::from_fit(0.02, 0.5, 100, 1, 0.05);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> ux(-5, 5);
  for (int i = 0; i < 10; ++i) {
    const double x = ux(gen);
    EXPECT_DOUBLE_EQ(phi_plus(p, p.rho(), x), phi_minus(p, p.rho(), -x));
  }
  double pm = INFINITY, pp = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double x = -5.0 + 0.1 * i;
    const double m = phi_minus(p, p.rho(), x), q = phi_plus(p, p.rho(), x);
    EXPECT_LT(m, pm);
    EXPECT_GT(q, pp);
    EXPECT_GT(m, 0.0);
    pm = m;
    pp = q;
  }
}

TEST(Map, DriftlessCentre) {
  const auto p = UouParams::from_fit(0.02, 0.5, 100, 1, 0.0);
  EXPECT_NEAR(map_f(p, 0.0), 100.0, 1e-12);
  EXPECT_NEAR(inverse_map(p, 100.0), 0.0, 1e-12);
}

TEST(Map, MonotoneAndRoundTrip) {
  const auto p = thick();
  double prev = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double f = map_f(p, -5.0 + 0.1 * i);
    EXPECT_GT(f, prev);
    prev = f;
  }
  for (double s : {50.0, 100.0, 200.0}) EXPECT_LT(rel(map_f(p, inverse_map(p, s)), s), 1e-8);
  EXPECT_NEAR(inverse_map(p, map_f(p, 1.2345)), 1.2345, 1e-8);
  double xprev = -INFINITY;
  for (double s : {60.0, 80.0, 100.0, 120.0, 140.0}) {
    const double x = inverse_map(p, s);
    EXPECT_GT(x, xprev);
    xprev = x;
  }
  EXPECT_THROW(inverse_map(p, -1.0), std::domain_error);
}

TEST(Map, InverseHintIsIrrelevant) {
  const auto p = ibm();
  for (double hint : {-20.0, -1.0, 0.0, 3.0, 25.0}) EXPECT_NEAR(inverse_map(p, 87.5, hint), inverse_map(p, 87.5), 1e-10);
}

TEST(LocalVol, DriftlessClosedForm) {
  const auto p = UouParams::from_fit(0.02, 0.5, 100, 1, 0.0);
  auto shape = [&](double x) { return std::exp(p.kappa() * x * x / 2) / std::exp(2 * log_u_hat(p, x)); };
  const double sigma0 = sigma(p, map_f(p, 0.0)) / shape(0.0);
  // same-order Wronskian fixes the constant
  const double closed = p.nu() * p.c() * std::sqrt(2 * M_PI * p.kappa()) / std::tgamma(p.upsilon());
  EXPECT_LT(rel(sigma0, closed), 1e-10);
  for (int i = 0; i < 10; ++i) {
    const double x = -2.0 + 0.4 * i + 0.05;
    EXPECT_LT(rel(sigma(p, map_f(p, x)), sigma0 * shape(x)), 1e-8) << x;
  }
}

TEST(LocalVol, MatchesFiniteDifferenceOfMap) {
  for (const auto& p : {thick(), thin(), ibm()}) {
    for (int i = 0; i < 10; ++i) {
      const double x = -1.5 + 0.3 * i;
      const double h = 1e-5;
      const double fd = (map_f(p, x + h) - map_f(p, x - h)) / (2 * h);
      EXPECT_LT(rel(sigma_x(p, x), p.nu() * fd), 1e-6) << x;
      EXPECT_LT(rel(sigma(p, map_f(p, x)), sigma_x(p, x)), 1e-9);
    }
  }
}

TEST(LocalVol, LognormalVolHasInteriorMinimum) {
  // sigma(s)/s on a log grid; the smile shows as an interior minimum
  const auto p = thin();
  std::vector<double> v;
  for (int i = 0; i <= 200; ++i) {
    const double s = 5.0 * std::pow(100.0, i / 200.0);
    v.push_back(sigma(p, s) / s);
  }
  const auto it = std::min_element(v.begin(), v.end());
  EXPECT_GT(it - v.begin(), 0);
  EXPECT_LT(it - v.begin(), 200);
}

TEST(Kernel, NormalisedAndSymmetric) {
  const UouParams p(0.5, 1.0, 100.0, 0.01, 0.0);  // kappa = 1
  for (double t : {0.01, 1.0, 10.0}) {
    const XWindow w = x_window(p, t, 0.0);
    const double mass = integrate([&](double x) { return p_x(p, t, 0.0, x); }, w.lo, w.hi, {1e-14, 1e-12, 400});
    EXPECT_NEAR(mass, 1.0, 1e-10) << t;
    EXPECT_DOUBLE_EQ(p_x(p, t, 0.0, 0.7), p_x(p, t, 0.0, -0.7));
  }
  const auto q = UouParams::from_fit(0.05, 0.5, 100, 1.0, 0.0);
  EXPECT_NEAR(p_x(q, 100.0 / q.lambda(), 3.0, 0.0), std::sqrt(1.0 / (2 * M_PI)), 1e-12);
}

TEST(Kernel, DoobTransformVanishesAsRhoShrinks) {
  // log u_hat is O(upsilon), so the tilted kernel approaches the plain one
  double prev = INFINITY;
  for (double ups : {0.1, 0.01, 0.001}) {
    const auto p = UouParams::from_fit(0.04 * ups, ups, 100, 1.0, 0.0);
    double worst = 0.0;
    for (double x : {-1.0, 0.0, 0.8, 1.5})
      worst = std::max(worst, std::abs(p_x_rho(p, 1.0, 0.3, x) / p_x(p, 1.0, 0.3, x) - 1.0));
    EXPECT_LT(worst, prev);
    prev = worst;
  }
  EXPECT_LT(prev, 5e-3);
}

TEST(Kernel, TiltedKernelIsConservative) {
  const auto p = thick();
  const double x0 = inverse_map(p, 100.0);
  EXPECT_NEAR(expect_x(p, 1.0, x0, [](double) { return 1.0; }), 1.0, 1e-8);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> ux(-3, 3), ut(0.01, 5);
  for (int i = 0; i < 100; ++i) {
    const double t = ut(gen), a = ux(gen), b = ux(gen);
    const double lg = log_p_x_rho(p, t, a, b);
    ASSERT_TRUE(std::isfinite(lg));
    if (lg > -700.0) {
      EXPECT_GT(p_x_rho(p, t, a, b), 0.0);
    }
  }
}

TEST(PriceDensity, NormalisedAndMartingale) {
  const auto p = thick();
  EXPECT_NEAR(integrate_ps(p, 1.0, 100.0, [](double) { return 1.0; }), 1.0, 1e-7);
  const double mean = integrate_ps(p, 1.0, 100.0, [](double s) { return s; });
  EXPECT_LT(rel(mean, 100.0 * std::exp(0.05)), 1e-6);
}

TEST(PriceDensity, SweepOverParameterSets) {
  for (const auto& p : {thin(), thick(), ibm()}) {
    for (double t : {0.05, 0.5, 1.0, 2.0}) {
      EXPECT_NEAR(integrate_ps(p, t, 100.0, [](double) { return 1.0; }), 1.0, 1e-7) << t;
      const double m = std::exp(-p.rate() * t) * integrate_ps(p, t, 100.0, [](double s) { return s; });
      EXPECT_LT(rel(m, 100.0), 1e-6) << t;
    }
  }
}

TEST(PriceDensity, TwoRoutesAgree) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> us(60, 160), ut(0.05, 2.0);
  for (const auto& p : {thin(), thick(), ibm()}) {
    for (int i = 0; i < 50; ++i) {
      const double t = ut(gen), s0 = us(gen), s = us(gen);
      EXPECT_LT(rel(p_s(p, t, s0, s), p_s_change_of_variable(p, t, s0, s)), 1e-7);
    }
  }
}

TEST(PriceDensity, ChapmanKolmogorov) {
  const auto p = thick();
  const double t1 = 0.4, t2 = 0.6, s0 = 100.0;
  const double x0 = inverse_map(p, s0);
  for (double s : {70.0, 90.0, 100.0, 115.0, 140.0}) {
    auto f = [&](double y) { return p_x_rho(p, t1, x0, y) * p_s(p, t2, map_f(p, y), s); };
    const XWindow w = x_window(p, t1, x0);
    const double lhs = integrate(f, w.lo, w.hi, {1e-14, 1e-10, 400});
    EXPECT_LT(rel(lhs, p_s(p, t1 + t2, s0, s)), 1e-5) << s;
  }
}

TEST(Bridge, EndpointPinning) {
  const auto p = thick();
  auto m = bridge_moments(p, 1e-14, 0.5, 0.3, -0.4);
  EXPECT_NEAR(m.mean, 0.3, 1e-10);
  EXPECT_NEAR(m.variance, 0.0, 1e-12);
  m = bridge_moments(p, 0.5, 1e-14, 0.3, -0.4);
  EXPECT_NEAR(m.mean, -0.4, 1e-10);
  EXPECT_NEAR(m.variance, 0.0, 1e-12);
  EXPECT_THROW(bridge_moments(p, 0.0, 0.0, 0.0, 0.0), std::domain_error);
}

TEST(Bridge, BrownianLimit) {
  const UouParams p(1e-6, 0.004, 100.0, 5e-7, 0.0);
  const double d1 = 0.3, d2 = 0.7, x1 = 0.4, x2 = -1.1;
  const auto m = bridge_moments(p, d1, d2, x1, x2);
  EXPECT_NEAR(m.mean, (x1 * d2 + x2 * d1) / (d1 + d2), 1e-5);
  // variance of nu W bridged: nu^2 d1 d2 / (d1 + d2)
  EXPECT_LT(rel(m.variance, p.nu() * p.nu() * d1 * d2 / (d1 + d2)), 1e-5);
}

TEST(Bridge, ExchangeSymmetry) {
  const auto p = ibm();
  const auto a = bridge_moments(p, 0.2, 0.9, 0.5, -0.3);
  const auto b = bridge_moments(p, 0.9, 0.2, -0.3, 0.5);
  EXPECT_NEAR(a.variance, b.variance, 1e-15);
  EXPECT_NEAR(a.mean, b.mean, 1e-14);
}

TEST(Bridge, PriceDensity) {
  const auto p = thick();
  const double t1 = 0.0, t2 = 1.0, s1 = 95.0, s2 = 108.0;
  const double x1 = inverse_map(p, s1), x2 = inverse_map(p, s2);
  for (double t : {0.2, 0.5, 0.8}) {
    const auto m = bridge_moments(p, t - t1, t2 - t, x1, x2);
    const double sd = std::sqrt(m.variance);
    auto f = [&](double x) { return bridge_density_s(p, t1, t2, t, s1, s2, map_f(p, x)) * map_f_deriv(p, x); };
    EXPECT_NEAR(integrate(f, m.mean - 12 * sd, m.mean + 12 * sd, {1e-13, 1e-11, 400}), 1.0, 1e-7);
  }
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> us(80, 125), ut(0.05, 0.95);
  for (int i = 0; i < 20; ++i) {
    const double t = ut(gen), s = us(gen);
    const double direct = bridge_density_s(p, t1, t2, t, s1, s2, s);
    const double ratio = p_s(p, t - t1, s1, s) * p_s(p, t2 - t, s, s2) / p_s(p, t2 - t1, s1, s2);
    EXPECT_LT(rel(direct, ratio), 1e-6);
  }
}

TEST(Bridge, ModeMovesTowardEndpoint) {
  const auto p = thick();
  const double s1 = 90.0, s2 = 115.0;
  double prev = 0.0;
  for (int i = 1; i <= 9; ++i) {
    const double t = 0.1 * i;
    const double mode = golden_max([&](double s) { return bridge_density_s(p, 0.0, 1.0, t, s1, s2, s); }, 60.0,
                                   150.0, 1e-7);
    EXPECT_GT(mode, prev);
    EXPECT_GT(mode, s1 - 5.0);
    EXPECT_LT(mode, s2 + 5.0);
    prev = mode;
  }
}

TEST(EuropeanQuadrature, BondForwardParity) {
  const auto p = thick();
  const double t = 1.0;
  EXPECT_NEAR(price_european_quadrature(p, [](double) { return 1.0; }, 100.0, t), std::exp(-0.05), 1e-9);
  for (double T : {0.25, 1.0, 3.0})
    EXPECT_LT(rel(price_european_quadrature(p, [](double s) { return s; }, 100.0, T), 100.0), 1e-8);
  for (double k : {90.0, 100.0, 110.0}) {
    const double kink[1] = {k};
    const double c = price_european_quadrature(p, [k](double s) { return std::max(s - k, 0.0); }, 100.0, t, {}, kink);
    const double q = price_european_quadrature(p, [k](double s) { return std::max(k - s, 0.0); }, 100.0, t, {}, kink);
    EXPECT_NEAR(c - q, 100.0 - k * std::exp(-0.05 * t), 1e-6);
  }
}

}  // namespace
