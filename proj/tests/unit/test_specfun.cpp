#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bcm/specfun.hpp"
#include "stats.hpp"

namespace {

using namespace bcm;

struct PcfRef {
  double order, z, d, dd;
};

const PcfRef kPcfRef[] = {
#include "pcf_reference.inc"
};

double rel_err(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-300); }

TEST(Pcf, ClosedFormOrderZero) {
  EXPECT_DOUBLE_EQ(pcf_d(0, 0), 1.0);
  EXPECT_NEAR(pcf_d(0, 2), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(pcf_d_deriv(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(pcf_d_deriv(0, 2), -std::exp(-1.0), 1e-15);
}

TEST(Pcf, ValueAtOrigin) {
  // D_v(0) = 2^{v/2} sqrt(pi) / Gamma((1 - v)/2)
  const double want = std::pow(2.0, -0.25) * std::sqrt(M_PI) / std::tgamma(0.75);
  EXPECT_LT(rel_err(pcf_d(-0.5, 0), want), 1e-14);
  // integral representation, Re v < 0:
  // D_v(z) = e^{-z^2/4} / Gamma(-v) * int_0^inf t^{-v-1} e^{-z t - t^2/2} dt
  const double v = -0.5;
  auto f = [&](double u) {
    // t = u^2 removes the t^{-1/2} endpoint singularity
    const double t = u * u;
    return 2.0 * u * std::pow(t, -v - 1) * std::exp(-t * t / 2);
  };
  const double integral = integrate(f, 0.0, 8.0, {1e-15, 1e-13, 400}) / std::tgamma(-v);
  EXPECT_LT(rel_err(integral, want), 1e-10);
}

TEST(Pcf, DerivativeMatchesFiniteDifference) {
  const double h = 1e-5;
  const double fd = (pcf_d(-0.7, 0.3 + h) - pcf_d(-0.7, 0.3 - h)) / (2 * h);
  EXPECT_LT(rel_err(pcf_d_deriv(-0.7, 0.3), fd), 1e-7);
}

TEST(Pcf, MatchesHighPrecisionReference) {
  double worst = 0.0;
  for (const auto& r : kPcfRef) {
    if (r.order < -10.0) continue;  // outside the checked range
    worst = std::max(worst, rel_err(pcf_d(r.order, r.z), r.d));
    if (r.dd != 0.0) worst = std::max(worst, rel_err(pcf_d_deriv(r.order, r.z), r.dd));
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(Pcf, RawRangeCoversOrderMinusEleven) {
  for (const auto& r : kPcfRef) {
    if (r.order != -11.0) continue;
    EXPECT_LT(rel_err(detail::pcf_d_raw(r.order, r.z), r.d), 1e-10) << r.z;
    EXPECT_LT(rel_err(detail::pcf_d_deriv_raw(r.order, r.z), r.dd), 1e-10) << r.z;
  }
}

TEST(Pcf, RangeIsEnforced) {
  EXPECT_THROW(pcf_d(-10.5, 1.0), std::domain_error);
  EXPECT_THROW(pcf_d(1.5, 1.0), std::domain_error);
  EXPECT_THROW(pcf_d(-1.0, 41.0), std::range_error);
  EXPECT_THROW(pcf_d_deriv(-1.0, -41.0), std::range_error);
}

TEST(Pcf, SatisfiesWeberEquation) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> ord(-10.0, 1.0), zz(-6.0, 6.0);
  const double h = 1e-4;
  for (int i = 0; i < 100; ++i) {
    const double v = ord(gen), z = zz(gen);
    const double d2 = (pcf_d_deriv(v, z + h) - pcf_d_deriv(v, z - h)) / (2 * h);
    const double d = pcf_d(v, z);
    const double residual = d2 + (v + 0.5 - z * z / 4) * d;
    const double scale = std::max({std::abs(d2), std::abs(d), 1e-300});
    EXPECT_LT(std::abs(residual) / scale, 1e-7) << "v=" << v << " z=" << z;
  }
}

TEST(Pcf, SameOrderWronskian) {
  for (double ups : {0.1, 0.5, 1.5}) {
    const double want = std::sqrt(2 * M_PI) / std::tgamma(ups);
    for (int i = 0; i < 20; ++i) {
      const double z = -4.0 + 0.4 * i;
      const double w = pcf_d(-ups, z) * (-pcf_d_deriv(-ups, -z)) - pcf_d_deriv(-ups, z) * pcf_d(-ups, -z);
      EXPECT_LT(rel_err(w, want), 1e-8) << "ups=" << ups << " z=" << z;
    }
  }
}

TEST(Normal, Symmetry) {
  EXPECT_DOUBLE_EQ(normal_cdf(0), 0.5);
  EXPECT_DOUBLE_EQ(normal_inv(0.5), 0.0);
  EXPECT_NEAR(normal_inv(0.975), 1.959963984540054, 1e-12);
  EXPECT_THROW(normal_inv(0.0), std::domain_error);
  EXPECT_THROW(normal_inv(1.0), std::domain_error);
}

TEST(Normal, MonotoneAndRoundTrip) {
  double prev = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double z = -10.0 + 0.05 * i;
    const double u = normal_cdf(z);
    EXPECT_GE(u, prev);
    prev = u;
    if (u > 1e-300 && u < 1.0 - 1e-15 && std::abs(z) < 8.0) {
      // u carries one ulp of error, which moves z by ulp(u) / pdf(z)
      const double tol = 1e-9 * std::max(1.0, std::abs(z)) + 4e-16 * u / normal_pdf(z);
      EXPECT_NEAR(normal_inv(u), z, tol);
    }
  }
}

TEST(Quadrature, Basics) {
  EXPECT_NEAR(integrate([](double) { return 1.0; }, 0, 1), 1.0, 1e-15);
  EXPECT_NEAR(integrate([](double x) { return x; }, 0, 1), 0.5, 1e-15);
  EXPECT_NEAR(integrate(normal_pdf, -8, 8), 1.0, 1e-10);
}

TEST(Quadrature, BudgetExhaustionThrows) {
  auto spiky = [](double x) { return 1.0 / std::sqrt(std::abs(x - 0.3)); };
  EXPECT_THROW(integrate(spiky, 0, 1, {1e-15, 1e-15, 3}), NonConvergence);
}

TEST(Roots, Bracketing) {
  EXPECT_NEAR(find_root([](double x) { return x - 2; }, 0, 5), 2.0, 1e-12);
  EXPECT_NEAR(find_root([](double x) { return x * x * x - 8; }, 0, 5), 2.0, 1e-12);
  EXPECT_NEAR(find_root([](double x) { return normal_cdf(x) - 0.975; }, -8, 8), 1.959963984540054, 1e-9);
  EXPECT_THROW(find_root([](double x) { return x * x + 1; }, -1, 1), std::invalid_argument);
}

TEST(Roots, GoldenSection) {
  EXPECT_NEAR(golden_max([](double x) { return -(x - 0.3) * (x - 0.3); }, -1, 1), 0.3, 1e-7);
}

TEST(KsHelper, MatchesExactDistribution) {
  // reference p-values from the exact finite-n distribution (scipy kstwo)
  EXPECT_NEAR(stats::ks_pvalue(0.005, 100000), 0.013430825, 0.05 * 0.013430825);
  EXPECT_NEAR(stats::ks_pvalue(0.0052, 100000), 0.008929990, 0.05 * 0.008929990);
  EXPECT_NEAR(stats::ks_pvalue(0.05, 1000), 0.013012075, 0.05 * 0.013012075);
  EXPECT_NEAR(stats::ks_pvalue(0.007, 50000), 0.014823358, 0.05 * 0.014823358);
}

}  // namespace
