#pragma once

#include <functional>
#include <span>
#include <vector>

#include "bcm/specfun.hpp"

namespace bcm {

// One asset of the UOU family: an OU process (lambda, nu), Doob-transformed
// with phi^-_rho and mapped to price space by F(x) = c phi^+_{r+rho} / phi^-_rho.
class UouParams {
 public:
  // Throws std::invalid_argument when a parameter is out of range.
  UouParams(double lambda, double nu, double c, double rho, double rate);

  // Calibration parameterisation (rho, upsilon, c, kappa).
  static UouParams from_fit(double rho, double upsilon, double c, double kappa, double rate);

  double lambda() const { return lambda_; }
  double nu() const { return nu_; }
  double c() const { return c_; }
  double rho() const { return rho_; }
  double rate() const { return rate_; }
  double kappa() const { return kappa_; }
  double upsilon() const { return upsilon_; }
  double sqrt_kappa() const { return sqrt_kappa_; }
  // Order magnitude of the numerator function in F: upsilon + r/lambda.
  double upsilon_r() const { return upsilon_ + rate_ / lambda_; }

  bool operator==(const UouParams&) const = default;

 private:
  double lambda_, nu_, c_, rho_, rate_;
  double kappa_, upsilon_, sqrt_kappa_;
};

struct BridgeMoments {
  double mean = 0.0;
  double variance = 0.0;
};

// Fundamental solutions of L phi = s phi. s_param plays the role of rho or r + rho.
double phi_minus(const UouParams& p, double s_param, double x);
double phi_plus(const UouParams& p, double s_param, double x);

// ln u_hat(x) with u_hat = phi^-_rho, safe where u_hat itself would overflow.
double log_u_hat(const UouParams& p, double x);
// d/dx ln u_hat(x).
double log_u_hat_deriv(const UouParams& p, double x);

double map_f(const UouParams& p, double x);
double log_map_f(const UouParams& p, double x);
// F'(x) and F'(x)/F(x).
double map_f_deriv(const UouParams& p, double x);
double log_map_f_deriv(const UouParams& p, double x);

// Largest |x| at which F is still evaluated (|x sqrt(kappa)| <= 35 keeps F finite).
double x_limit(const UouParams& p);

// X(s). The hint seeds the Newton iteration; any value is accepted.
double inverse_map(const UouParams& p, double s);
double inverse_map(const UouParams& p, double s, double hint);

// Local volatility: sigma(s) = nu F'(X(s)).
double sigma(const UouParams& p, double s);
double sigma_x(const UouParams& p, double x);

double p_x(const UouParams& p, double t, double x0, double x);
double log_p_x(const UouParams& p, double t, double x0, double x);
double p_x_rho(const UouParams& p, double t, double x0, double x);
double log_p_x_rho(const UouParams& p, double t, double x0, double x);

// Price-space transition density via the Wronskian formula.
double p_s(const UouParams& p, double t, double s0, double s);
// Same density via change of variables, (nu / sigma(s)) p_x_rho.
double p_s_change_of_variable(const UouParams& p, double t, double s0, double s);
// Wronskian W_x[D_{-v}(x sqrt k), D_{-v-r/lambda}(-x sqrt k)] from pcf_d and pcf_d_deriv.
double wronskian_w(const UouParams& p, double x);

BridgeMoments bridge_moments(const UouParams& p, double delta1, double delta2, double x1,
                             double x2);
double bridge_density_s(const UouParams& p, double t1, double t2, double t, double s1, double s2,
                        double s);

struct XWindow {
  double lo = 0.0;
  double hi = 0.0;
};

// Truncation window for x-space integrals started at x0 over horizon t. Covers
// ten standard deviations of the OU kernel and of the Doob-tilted left tail
// (centre x0 e^{lambda t}), clipped to x_limit.
XWindow x_window(const UouParams& p, double t, double x0);

// European price by one-dimensional quadrature in x. Payoff kinks (in price
// space) are passed as breakpoints.
double price_european_quadrature(const UouParams& p, const std::function<double(double)>& payoff,
                                 double s0, double maturity, const QuadratureSpec& spec = {},
                                 std::span<const double> kinks = {});

// Integrates g(x) p_x_rho(t; x0, x) over the window of (t, x0), split at breaks.
double expect_x(const UouParams& p, double t, double x0, const std::function<double(double)>& g,
                const QuadratureSpec& spec = {}, std::span<const double> x_breaks = {});

}  // namespace bcm
