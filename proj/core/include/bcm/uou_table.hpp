#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "bcm/uou.hpp"

namespace bcm {

// Piecewise cubic Hermite table on a uniform grid, with exact node slopes.
class HermiteTable {
 public:
  HermiteTable() = default;
  HermiteTable(double lo, double hi, std::vector<double> y, std::vector<double> dy);

  bool contains(double x) const { return x >= lo_ && x <= hi_; }
  double operator()(double x) const {
    const double u = (x - lo_) * inv_h_;
    const std::size_t i = std::min<std::size_t>(std::size_t(std::max(u, 0.0)), y_.size() - 2);
    const double t = u - double(i);
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * y_[i] + h10 * h_ * dy_[i] + h01 * y_[i + 1] + h11 * h_ * dy_[i + 1];
  }
  double derivative(double x) const;
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const std::vector<double>& nodes() const { return y_; }

  // For increasing tables: x with value y. Requires nodes().front() <= y <= nodes().back().
  double solve(double y) const;

 private:
  double lo_ = 0.0, hi_ = 0.0, h_ = 1.0, inv_h_ = 1.0;
  std::vector<double> y_, dy_;
};

// Fast evaluation of ln F and ln u_hat for one asset on an x-window. Outside
// the window every call falls back to the exact functions. Interpolation
// error is around 1e-11 relative at the default node count.
class UouMapTable {
 public:
  UouMapTable(const UouParams& p, double x_lo, double x_hi, std::size_t nodes = 4096);

  const UouParams& params() const { return p_; }
  double lo() const { return log_f_.lo(); }
  double hi() const { return log_f_.hi(); }

  double map_f(double x) const {
    return log_f_.contains(x) ? std::exp(log_f_(x)) : bcm::map_f(p_, x);
  }
  double log_map_f(double x) const {
    return log_f_.contains(x) ? log_f_(x) : bcm::log_map_f(p_, x);
  }
  double log_u_hat(double x) const {
    return log_u_.contains(x) ? log_u_(x) : bcm::log_u_hat(p_, x);
  }
  double inverse_map(double s) const;

 private:
  UouParams p_;
  HermiteTable log_f_, log_u_;
};

}  // namespace bcm
