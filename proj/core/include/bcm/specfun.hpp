#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>

#include "bcm/errors.hpp"

namespace bcm {

// Parabolic cylinder function D_order(z), Whittaker's notation.
// Working range: order in [-10, 1], |z| <= 40. Orders outside throw
// std::domain_error; |z| beyond the range or an overflowing result throw
// std::range_error.
double pcf_d(double order, double z);

// dD_order/dz, same working range as pcf_d.
double pcf_d_deriv(double order, double z);

namespace detail {
// Unchecked evaluation used internally; accurate for order in [-11, 1] and
// |z| <= 40. Callers are responsible for the range.
double pcf_d_raw(double order, double z);
double pcf_d_deriv_raw(double order, double z);
}  // namespace detail

double normal_pdf(double z);
double normal_cdf(double z);
// Inverse of normal_cdf on (0, 1). Throws std::domain_error at or outside
// the endpoints.
double normal_inv(double u);

struct QuadratureSpec {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  std::size_t max_subdivisions = 200;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
};

// Globally adaptive Gauss-Kronrod (21 point) on [a, b]. Throws
// NonConvergence if the tolerance is not met within max_subdivisions.
QuadratureResult integrate_ex(const std::function<double(double)>& f, double a, double b,
                              const QuadratureSpec& spec = {});

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        const QuadratureSpec& spec = {}) {
  return integrate_ex(f, a, b, spec).value;
}

// Bracketing root search (TOMS 748). Requires f(lo) * f(hi) <= 0, otherwise
// std::invalid_argument. Stops when the bracket is narrower than tol
// (relative to max(1, |x|)) or |f| drops below f_tol.
double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double tol = 1e-13, double f_tol = 0.0, std::size_t max_iter = 200);

// Golden-section maximisation of a unimodal function on [lo, hi].
double golden_max(const std::function<double(double)>& f, double lo, double hi,
                  double tol = 1e-8);

}  // namespace bcm
