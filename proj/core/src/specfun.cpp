#include "bcm/specfun.hpp"

#include "pcf_pair.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/toms748_solve.hpp>

namespace bcm {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;
constexpr double kSqrt2Pi = 2.5066282746310005024;

// Below this argument the Kummer series is used for positive z as well.
constexpr double kSeriesCut = 1.0;

double rgamma(double x) {
  if (x <= 0.0 && x == std::nearbyint(x)) return 0.0;
  return 1.0 / std::tgamma(x);
}

// D_v(z) = 2^(v/2) [A M(-v/2, 1/2, z^2/2) - B z M((1-v)/2, 3/2, z^2/2)] with
// the e^(-z^2/4) factor pushed into the leading term of each sum so that
// large |z| cannot overflow.
double kummer_series(double v, double z) {
  const double x = 0.5 * z * z;
  const double lead = std::exp(-0.25 * z * z);
  const double a1 = -0.5 * v;
  const double a2 = 0.5 * (1.0 - v);

  double t1 = lead, s1 = lead;
  double t2 = lead, s2 = lead;
  for (int k = 0; k < 20000; ++k) {
    const double dk = k;
    t1 *= (a1 + dk) * x / ((0.5 + dk) * (dk + 1.0));
    t2 *= (a2 + dk) * x / ((1.5 + dk) * (dk + 1.0));
    s1 += t1;
    s2 += t2;
    if (dk > x && std::abs(t1) <= 1e-17 * std::abs(s1) && std::abs(t2) <= 1e-17 * std::abs(s2))
      break;
  }
  const double A = kSqrtPi * rgamma(a2);
  const double B = kSqrt2Pi * rgamma(a1);
  return std::exp2(0.5 * v) * (A * s1 - B * z * s2);
}

// h = D_{-a-1}(z) / D_{-a}(z) = 1/(z + (a+1)/(z + (a+2)/(z + ...))), modified Lentz.
double ratio_cf(double a, double z) {
  constexpr double tiny = 1e-300;
  double f = tiny, C = f, D = 0.0;
  for (int j = 1; j < 100000; ++j) {
    const double aj = (j == 1) ? 1.0 : a + (j - 1);
    D = z + aj * D;
    if (D == 0.0) D = tiny;
    C = z + aj / C;
    if (C == 0.0) C = tiny;
    D = 1.0 / D;
    const double delta = C * D;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) return f;
  }
  throw NonConvergence("pcf: continued fraction did not converge");
}

// Negative order, positive z: the Wronskian of D_v(z) and D_v(-z) gives
// D_{-a}(z) [D_{-a-1}(-z) + h D_{-a}(-z)] = sqrt(2 pi) / Gamma(a + 1),
// where every term is positive.
detail::PcfPair recessive_pair(double a, double z) {
  const double h = ratio_cf(a, z);
  double d;
  if (a == 0.0) {
    d = std::exp(-0.25 * z * z);
  } else {
    const double m0 = kummer_series(-a, -z);
    const double m1 = kummer_series(-a - 1.0, -z);
    d = kSqrt2Pi / (std::tgamma(a + 1.0) * (m1 + h * m0));
  }
  return {d, h * d};
}

double recessive(double a, double z) { return recessive_pair(a, z).value; }

}  // namespace

namespace detail {

double pcf_d_raw(double v, double z) {
  if (v == 0.0) return std::exp(-0.25 * z * z);
  if (v == 1.0) return z * std::exp(-0.25 * z * z);
  if (z <= kSeriesCut) return kummer_series(v, z);
  if (v < 0.0) return recessive(-v, z);
  // 0 < v < 1: upward step from two negative orders, no cancellation for z > 0
  return z * recessive(1.0 - v, z) + (1.0 - v) * recessive(2.0 - v, z);
}

PcfPair pcf_pair(double v, double z) {
  if (v <= 0.0 && z > kSeriesCut) return recessive_pair(-v, z);
  return {pcf_d_raw(v, z), pcf_d_raw(v - 1.0, z)};
}

double pcf_d_deriv_raw(double v, double z) {
  if (v == 0.0) return -0.5 * z * std::exp(-0.25 * z * z);
  const PcfPair q = pcf_pair(v, z);
  return v * q.lower - 0.5 * z * q.value;
}

}  // namespace detail

namespace {
void check_pcf_args(double order, double z) {
  if (!(order >= -10.0 - 1e-12 && order <= 1.0 + 1e-12)) {
    std::ostringstream os;
    os << "pcf_d: order " << order << " outside [-10, 1]";
    throw std::domain_error(os.str());
  }
  if (!std::isfinite(z)) throw std::domain_error("pcf_d: non-finite argument");
  if (std::abs(z) > 40.0) {
    std::ostringstream os;
    os << "pcf_d: |z| = " << std::abs(z) << " exceeds 40";
    throw std::range_error(os.str());
  }
}
}  // namespace

double pcf_d(double order, double z) {
  check_pcf_args(order, z);
  const double d = detail::pcf_d_raw(order, z);
  if (!std::isfinite(d)) throw std::range_error("pcf_d: result overflows");
  return d;
}

double pcf_d_deriv(double order, double z) {
  check_pcf_args(order, z);
  const double d = detail::pcf_d_deriv_raw(order, z);
  if (!std::isfinite(d)) throw std::range_error("pcf_d_deriv: result overflows");
  return d;
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / kSqrt2Pi; }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_inv(double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("normal_inv: u must lie in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

QuadratureResult integrate_ex(const std::function<double(double)>& f, double a, double b,
                              const QuadratureSpec& spec) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
  QuadratureResult out;
  if (a == b) return out;
  double sign = 1.0;
  if (a > b) {
    std::swap(a, b);
    sign = -1.0;
  }

  struct Piece {
    double a, b, value, error;
    bool operator<(const Piece& o) const { return error < o.error; }
  };
  // 21-point Kronrod rule with its embedded 10-point Gauss rule; nodes and
  // weights from Boost. Gauss nodes sit at the odd Kronrod indices.
  const auto& xk = GK::abscissa();
  const auto& wk = GK::weights();
  const auto& wg = boost::math::quadrature::gauss<double, 10>::weights();
  auto rule = [&](double lo, double hi) {
    const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    const double fc = f(c);
    double k = wk[0] * fc, g = 0.0;
    for (std::size_t i = 1; i < xk.size(); ++i) {
      const double s = f(c + h * xk[i]) + f(c - h * xk[i]);
      k += wk[i] * s;
      if (i % 2 == 1) g += wg[i / 2] * s;
    }
    out.evaluations += 21;
    const double err = std::max(std::abs(k - g) * h, 50.0 * 2.2e-16 * std::abs(k * h));
    return Piece{lo, hi, k * h, err};
  };

  std::priority_queue<Piece> heap;
  Piece first = rule(a, b);
  double total = first.value, total_err = first.error;
  heap.push(first);
  std::size_t pieces = 1;
  while (total_err > std::max(spec.abs_tol, spec.rel_tol * std::abs(total))) {
    if (pieces >= spec.max_subdivisions) {
      std::ostringstream os;
      os << "integrate: error " << total_err << " above tolerance after " << pieces
         << " subdivisions on [" << a << ", " << b << "]";
      throw NonConvergence(os.str());
    }
    Piece worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    Piece l = rule(worst.a, mid), r = rule(mid, worst.b);
    total += l.value + r.value - worst.value;
    total_err += l.error + r.error - worst.error;
    heap.push(l);
    heap.push(r);
    ++pieces;
    // Resum occasionally to stop drift in the running totals.
    if (pieces % 64 == 0) {
      auto copy = heap;
      total = total_err = 0.0;
      while (!copy.empty()) {
        total += copy.top().value;
        total_err += copy.top().error;
        copy.pop();
      }
    }
  }
  out.value = sign * total;
  out.error = total_err;
  return out;
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double tol,
                 double f_tol, std::size_t max_iter) {
  if (lo > hi) std::swap(lo, hi);
  const double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (!(flo * fhi < 0.0)) {
    std::ostringstream os;
    os << "find_root: [" << lo << ", " << hi << "] does not bracket a root (f = " << flo << ", "
       << fhi << ")";
    throw std::invalid_argument(os.str());
  }
  bool hit = false;
  double hit_x = lo;
  auto g = [&](double x) {
    const double v = f(x);
    if (std::abs(v) <= f_tol) {
      hit = true;
      hit_x = x;
    }
    return v;
  };
  auto stop = [&](double a, double b) {
    return hit || std::abs(b - a) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
  };
  boost::uintmax_t iters = max_iter;
  auto [a, b] = boost::math::tools::toms748_solve(g, lo, hi, flo, fhi, stop, iters);
  if (hit) return hit_x;
  if (iters >= max_iter && !stop(a, b)) throw NonConvergence("find_root: iteration budget exhausted");
  return 0.5 * (a + b);
}

double golden_max(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace bcm
