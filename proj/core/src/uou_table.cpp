#include "bcm/uou_table.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bcm {

HermiteTable::HermiteTable(double lo, double hi, std::vector<double> y, std::vector<double> dy)
    : lo_(lo), hi_(hi), y_(std::move(y)), dy_(std::move(dy)) {
  if (y_.size() < 2 || y_.size() != dy_.size() || !(hi > lo))
    throw std::invalid_argument("HermiteTable: need >= 2 nodes on a non-empty interval");
  h_ = (hi - lo) / double(y_.size() - 1);
  inv_h_ = 1.0 / h_;
}

double HermiteTable::derivative(double x) const {
  const double u = (x - lo_) * inv_h_;
  std::size_t i = std::min<std::size_t>(std::size_t(std::max(u, 0.0)), y_.size() - 2);
  const double t = u - double(i);
  const double t2 = t * t;
  const double d00 = 6 * t2 - 6 * t, d10 = 3 * t2 - 4 * t + 1;
  const double d01 = -6 * t2 + 6 * t, d11 = 3 * t2 - 2 * t;
  return (d00 * y_[i] + d01 * y_[i + 1]) * inv_h_ + d10 * dy_[i] + d11 * dy_[i + 1];
}

double HermiteTable::solve(double y) const {
  auto it = std::upper_bound(y_.begin(), y_.end(), y);
  std::size_t i = std::size_t(std::max<std::ptrdiff_t>(it - y_.begin() - 1, 0));
  i = std::min(i, y_.size() - 2);
  double a = lo_ + h_ * double(i), b = a + h_;
  double x = a + h_ * std::clamp((y - y_[i]) / (y_[i + 1] - y_[i]), 0.0, 1.0);
  for (int k = 0; k < 30; ++k) {
    const double g = (*this)(x) - y;
    if (g == 0.0) break;
    if (g < 0.0) a = x; else b = x;
    const double d = derivative(x);
    double next = d > 0.0 ? x - g / d : 0.5 * (a + b);
    if (!(next >= a && next <= b)) next = 0.5 * (a + b);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x))) return next;
    x = next;
  }
  return x;
}

UouMapTable::UouMapTable(const UouParams& p, double x_lo, double x_hi, std::size_t nodes) : p_(p) {
  const double lim = x_limit(p);
  x_lo = std::max(x_lo, -lim);
  x_hi = std::min(x_hi, lim);
  std::vector<double> lf(nodes), dlf(nodes), lu(nodes), dlu(nodes);
  const double h = (x_hi - x_lo) / double(nodes - 1);
  for (std::size_t i = 0; i < nodes; ++i) {
    const double x = x_lo + h * double(i);
    lf[i] = bcm::log_map_f(p, x);
    dlf[i] = bcm::log_map_f_deriv(p, x);
    lu[i] = bcm::log_u_hat(p, x);
    dlu[i] = bcm::log_u_hat_deriv(p, x);
  }
  log_f_ = HermiteTable(x_lo, x_hi, std::move(lf), std::move(dlf));
  log_u_ = HermiteTable(x_lo, x_hi, std::move(lu), std::move(dlu));
}

double UouMapTable::inverse_map(double s) const {
  const double ls = std::log(s);
  const auto& y = log_f_.nodes();
  if (ls >= y.front() && ls <= y.back()) return log_f_.solve(ls);
  return bcm::inverse_map(p_, s);
}

}  // namespace bcm
