#include "bcm/uou.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "pcf_pair.hpp"

namespace bcm {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kZLimit = 35.0;

void require(bool ok, const char* what, double v) {
  if (!ok) {
    std::ostringstream os;
    os << "UouParams: " << what << " (got " << v << ")";
    throw std::invalid_argument(os.str());
  }
}

void require_t(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::domain_error("uou: time step must be positive");
}

}  // namespace

UouParams::UouParams(double lambda, double nu, double c, double rho, double rate)
    : lambda_(lambda), nu_(nu), c_(c), rho_(rho), rate_(rate) {
  require(std::isfinite(lambda) && lambda > 0.0, "lambda must be positive", lambda);
  require(std::isfinite(nu) && nu > 0.0, "nu must be positive", nu);
  require(std::isfinite(c) && c > 0.0, "c must be positive", c);
  require(std::isfinite(rho) && rho > 0.0, "rho must be positive", rho);
  require(std::isfinite(rate), "rate must be finite", rate);
  require(rate + rho > 0.0, "rate + rho must be positive", rate + rho);
  kappa_ = 2.0 * lambda / (nu * nu);
  upsilon_ = rho / lambda;
  sqrt_kappa_ = std::sqrt(kappa_);
  require(upsilon_ >= 0.001 && upsilon_ <= 5.0, "upsilon outside [0.001, 5]", upsilon_);
  require(kappa_ >= 0.1 && kappa_ <= 20.0, "kappa outside [0.1, 20]", kappa_);
  // F' needs D of order -(upsilon + r/lambda) - 1, which must stay >= -10.
  require(upsilon_r() <= 9.0, "upsilon + r/lambda above 9", upsilon_r());
}

UouParams UouParams::from_fit(double rho, double upsilon, double c, double kappa, double rate) {
  require(std::isfinite(upsilon) && upsilon > 0.0, "upsilon must be positive", upsilon);
  require(std::isfinite(kappa) && kappa > 0.0, "kappa must be positive", kappa);
  const double lambda = rho / upsilon;
  return UouParams(lambda, std::sqrt(2.0 * lambda / kappa), c, rho, rate);
}

double phi_minus(const UouParams& p, double s_param, double x) {
  if (!(s_param > 0.0)) throw std::domain_error("phi_minus: s_param must be positive");
  const double z = x * p.sqrt_kappa();
  return std::exp(0.25 * z * z) * pcf_d(-s_param / p.lambda(), z);
}

double phi_plus(const UouParams& p, double s_param, double x) { return phi_minus(p, s_param, -x); }

double x_limit(const UouParams& p) { return kZLimit / p.sqrt_kappa(); }

double log_u_hat(const UouParams& p, double x) {
  const double z = x * p.sqrt_kappa();
  return 0.25 * z * z + std::log(detail::pcf_d_raw(-p.upsilon(), z));
}

double log_u_hat_deriv(const UouParams& p, double x) {
  const double z = x * p.sqrt_kappa();
  const auto d = detail::pcf_pair(-p.upsilon(), z);
  // d/dz ln D_{-v}(z) = -v D_{-v-1}/D_{-v} - z/2
  return p.sqrt_kappa() * (-p.upsilon() * d.lower / d.value);
}

double log_map_f(const UouParams& p, double x) {
  const double z = x * p.sqrt_kappa();
  return std::log(p.c()) + std::log(detail::pcf_d_raw(-p.upsilon_r(), -z)) -
         std::log(detail::pcf_d_raw(-p.upsilon(), z));
}

double map_f(const UouParams& p, double x) {
  const double z = x * p.sqrt_kappa();
  if (std::abs(z) > kZLimit) throw std::range_error("map_f: x outside the working range");
  return p.c() * detail::pcf_d_raw(-p.upsilon_r(), -z) / detail::pcf_d_raw(-p.upsilon(), z);
}

double log_map_f_deriv(const UouParams& p, double x) {
  const double z = x * p.sqrt_kappa();
  const double a = p.upsilon_r();
  const auto g = detail::pcf_pair(-a, -z);
  const auto d = detail::pcf_pair(-p.upsilon(), z);
  return p.sqrt_kappa() * (a * g.lower / g.value + p.upsilon() * d.lower / d.value);
}

// F'(x) = c sqrt(k) [a D_{-a-1}(-z)/D_{-v}(z) + v D_{-a}(-z) D_{-v-1}(z) / D_{-v}(z)^2],
// a = v + r/lambda. Every term is positive.
double map_f_deriv(const UouParams& p, double x) {
  const double z = x * p.sqrt_kappa();
  if (std::abs(z) > kZLimit) throw std::range_error("map_f_deriv: x outside the working range");
  const double a = p.upsilon_r();
  const auto g = detail::pcf_pair(-a, -z);
  const auto d = detail::pcf_pair(-p.upsilon(), z);
  const double r = 1.0 / d.value;
  return p.c() * p.sqrt_kappa() * (a * g.lower * r + p.upsilon() * g.value * d.lower * r * r);
}

double inverse_map(const UouParams& p, double s) { return inverse_map(p, s, 0.0); }

double inverse_map(const UouParams& p, double s, double hint) {
  if (!(s > 0.0) || !std::isfinite(s)) throw std::domain_error("inverse_map: s must be positive");
  const double target = std::log(s);
  const double xmax = x_limit(p);
  auto g = [&](double x) { return log_map_f(p, x) - target; };

  // Expanding bracket around the hint.
  double lo = std::clamp(hint - 1.0, -xmax, xmax), hi = std::clamp(hint + 1.0, -xmax, xmax);
  double glo = g(lo), ghi = g(hi);
  double step = 1.0;
  while (glo > 0.0) {
    if (lo <= -xmax) throw std::range_error("inverse_map: s below the reachable range of F");
    hi = lo;
    ghi = glo;
    step *= 2.0;
    lo = std::max(lo - step, -xmax);
    glo = g(lo);
  }
  while (ghi < 0.0) {
    if (hi >= xmax) throw std::range_error("inverse_map: s above the reachable range of F");
    lo = hi;
    glo = ghi;
    step *= 2.0;
    hi = std::min(hi + step, xmax);
    ghi = g(hi);
  }

  // Safeguarded Newton on ln F, which is close to quadratic in the tails.
  double x = std::clamp(hint, lo, hi);
  if (x == lo || x == hi) x = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double gx = g(x);
    if (std::abs(gx) < 1e-14) return x;
    if (gx < 0.0) lo = x; else hi = x;
    const double slope = log_map_f_deriv(p, x);
    double next = x - gx / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) < 1e-15 * std::max(1.0, std::abs(x))) return next;
    x = next;
    if (hi - lo < 1e-15 * std::max(1.0, std::abs(x))) return x;
  }
  throw NonConvergence("inverse_map: Newton iteration did not converge");
}

double sigma_x(const UouParams& p, double x) { return p.nu() * map_f_deriv(p, x); }

double sigma(const UouParams& p, double s) { return sigma_x(p, inverse_map(p, s)); }

double log_p_x(const UouParams& p, double t, double x0, double x) {
  require_t(t);
  const double q = -std::expm1(-2.0 * p.lambda() * t);
  const double d = x - x0 * std::exp(-p.lambda() * t);
  return 0.5 * std::log(p.kappa() / q) - kLogSqrt2Pi - p.kappa() * d * d / (2.0 * q);
}

double p_x(const UouParams& p, double t, double x0, double x) { return std::exp(log_p_x(p, t, x0, x)); }

double log_p_x_rho(const UouParams& p, double t, double x0, double x) {
  return -p.rho() * t + log_u_hat(p, x) - log_u_hat(p, x0) + log_p_x(p, t, x0, x);
}

double p_x_rho(const UouParams& p, double t, double x0, double x) {
  return std::exp(log_p_x_rho(p, t, x0, x));
}

double wronskian_w(const UouParams& p, double x) {
  const double k = p.sqrt_kappa();
  const double z = x * k;
  const double a = p.upsilon_r();
  const double d = detail::pcf_d_raw(-p.upsilon(), z);
  const double dd = detail::pcf_d_deriv_raw(-p.upsilon(), z);
  const double g = detail::pcf_d_raw(-a, -z);
  const double gd = detail::pcf_d_deriv_raw(-a, -z);
  // d/dx D(x k) = k D'(z); d/dx G(-x k) = -k G'(-z)
  return d * (-k * gd) - (k * dd) * g;
}

double p_s(const UouParams& p, double t, double s0, double s) {
  require_t(t);
  if (!(s0 > 0.0) || !(s > 0.0)) throw std::domain_error("p_s: prices must be positive");
  const double x0 = inverse_map(p, s0);
  const double x = inverse_map(p, s, x0);
  const double k = p.kappa();
  const double d = detail::pcf_d_raw(-p.upsilon(), x * p.sqrt_kappa());
  const double d0 = detail::pcf_d_raw(-p.upsilon(), x0 * p.sqrt_kappa());
  const double lg = -p.rho() * t + 0.25 * k * (x * x - x0 * x0) - std::log(p.c()) -
                    std::log(wronskian_w(p, x)) + 3.0 * std::log(d) - std::log(d0) +
                    log_p_x(p, t, x0, x);
  return std::exp(lg);
}

double p_s_change_of_variable(const UouParams& p, double t, double s0, double s) {
  require_t(t);
  if (!(s0 > 0.0) || !(s > 0.0)) throw std::domain_error("p_s: prices must be positive");
  const double x0 = inverse_map(p, s0);
  const double x = inverse_map(p, s, x0);
  return std::exp(log_p_x_rho(p, t, x0, x) - std::log(map_f_deriv(p, x)));
}

BridgeMoments bridge_moments(const UouParams& p, double delta1, double delta2, double x1,
                             double x2) {
  if (!(delta1 >= 0.0) || !(delta2 >= 0.0) || !(delta1 + delta2 > 0.0))
    throw std::domain_error("bridge_moments: need delta1, delta2 >= 0 with positive sum");
  const double l2 = 2.0 * p.lambda();
  // 1 - e^{-2 lambda delta} in expm1 form stays accurate for small arguments.
  const double q1 = -std::expm1(-l2 * delta1);
  const double q2 = -std::expm1(-l2 * delta2);
  const double q = -std::expm1(-l2 * (delta1 + delta2));
  BridgeMoments m;
  m.mean = (x1 * std::exp(-p.lambda() * delta1) * q2 + x2 * std::exp(-p.lambda() * delta2) * q1) / q;
  m.variance = q1 * q2 / (p.kappa() * q);
  return m;
}

double bridge_density_s(const UouParams& p, double t1, double t2, double t, double s1, double s2,
                        double s) {
  if (!(t1 < t && t < t2)) throw std::domain_error("bridge_density_s: need t1 < t < t2");
  const double x1 = inverse_map(p, s1);
  const double x2 = inverse_map(p, s2, x1);
  const double x = inverse_map(p, s, x1);
  const auto m = bridge_moments(p, t - t1, t2 - t, x1, x2);
  const double b = std::sqrt(m.variance);
  return normal_pdf((x - m.mean) / b) / (b * map_f_deriv(p, x));
}

XWindow x_window(const UouParams& p, double t, double x0) {
  require_t(t);
  const double lt = p.lambda() * t;
  const double m = x0 * std::exp(-lt);
  const double sk = std::sqrt(-std::expm1(-2.0 * lt) / p.kappa());
  const double mt = x0 * std::exp(lt);
  const double st = std::sqrt(std::expm1(2.0 * lt) / p.kappa());
  const double lim = x_limit(p);
  XWindow w;
  w.lo = std::max(std::min(m - 10.0 * sk, mt - 10.0 * st), -lim);
  w.hi = std::min(std::max(m + 10.0 * sk, mt + 10.0 * st), lim);
  return w;
}

double expect_x(const UouParams& p, double t, double x0, const std::function<double(double)>& g,
                const QuadratureSpec& spec, std::span<const double> x_breaks) {
  const XWindow w = x_window(p, t, x0);
  const double lu0 = log_u_hat(p, x0);
  auto f = [&](double x) {
    return std::exp(-p.rho() * t + log_u_hat(p, x) - lu0 + log_p_x(p, t, x0, x)) * g(x);
  };
  std::vector<double> pts{w.lo};
  // Interior split points: kernel centre and any caller-supplied kinks.
  std::vector<double> inner(x_breaks.begin(), x_breaks.end());
  inner.push_back(x0 * std::exp(-p.lambda() * t));
  std::sort(inner.begin(), inner.end());
  for (double b : inner)
    if (b > pts.back() && b < w.hi) pts.push_back(b);
  pts.push_back(w.hi);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) total += integrate(f, pts[i], pts[i + 1], spec);
  return total;
}

double price_european_quadrature(const UouParams& p, const std::function<double(double)>& payoff,
                                 double s0, double maturity, const QuadratureSpec& spec,
                                 std::span<const double> kinks) {
  const double x0 = inverse_map(p, s0);
  std::vector<double> xb;
  for (double k : kinks) {
    try {
      xb.push_back(inverse_map(p, k, x0));
    } catch (const std::range_error&) {
      // kink beyond the reachable price range: nothing to split
    }
  }
  const double v = expect_x(p, maturity, x0, [&](double x) { return payoff(map_f(p, x)); }, spec, xb);
  return std::exp(-p.rate() * maturity) * v;
}

}  // namespace bcm
