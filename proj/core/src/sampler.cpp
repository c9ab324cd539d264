#include "bcm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

#include "bcm/specfun.hpp"

namespace bcm {

TimeGrid::TimeGrid(std::vector<double> points) : t_(std::move(points)) {
  if (t_.size() < 2) throw std::invalid_argument("TimeGrid: need at least one step");
  if (t_.front() != 0.0) throw std::invalid_argument("TimeGrid: first point must be 0");
  for (std::size_t j = 1; j < t_.size(); ++j)
    if (!(t_[j] > t_[j - 1])) throw std::invalid_argument("TimeGrid: points must increase strictly");
}

TimeGrid TimeGrid::uniform(double maturity, std::size_t steps) {
  if (steps == 0 || !(maturity > 0.0)) throw std::invalid_argument("TimeGrid: bad uniform grid");
  std::vector<double> t(steps + 1);
  for (std::size_t j = 0; j <= steps; ++j) t[j] = maturity * double(j) / double(steps);
  t.back() = maturity;
  return TimeGrid(std::move(t));
}

TabulatedInverseCdf::TabulatedInverseCdf(double w_lo, double w_hi, std::vector<double> x,
                                         std::vector<double> dxdw)
    : w_lo_(w_lo), w_hi_(w_hi), table_(w_lo, w_hi, std::move(x), std::move(dxdw)) {
  const auto& v = table_.nodes();
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) throw std::invalid_argument("TabulatedInverseCdf: values not increasing");
}

double TabulatedInverseCdf::inverse(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("TabulatedInverseCdf: u outside (0, 1)");
  return from_score(normal_inv(std::clamp(u, u_min(), u_max())));
}

double TabulatedInverseCdf::u_min() const { return normal_cdf(w_lo_); }
double TabulatedInverseCdf::u_max() const { return normal_cdf(w_hi_); }

std::vector<double> TabulatedInverseCdf::levels() const {
  const std::size_t n = values().size();
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i)
    u[i] = normal_cdf(w_lo_ + (w_hi_ - w_lo_) * double(i) / double(n - 1));
  return u;
}

TabulatedInverseCdf build_inverse_cdf(const std::function<double(double)>& log_density, double x_lo,
                                      double x_hi, std::size_t grid_size, double tail) {
  if (grid_size < 64) throw std::invalid_argument("build_inverse_cdf: grid_size must be >= 64");
  if (!(x_hi > x_lo)) throw std::invalid_argument("build_inverse_cdf: empty window");
  using GL = boost::math::quadrature::gauss<double, 10>;
  auto f = [&](double x) { return std::exp(log_density(x)); };

  constexpr std::size_t cells = 1024;
  const double h = (x_hi - x_lo) / double(cells);
  std::vector<double> mass(cells), left(cells + 1, 0.0), right(cells + 1, 0.0);
  for (std::size_t i = 0; i < cells; ++i) mass[i] = GL::integrate(f, x_lo + h * i, x_lo + h * (i + 1));
  for (std::size_t i = 0; i < cells; ++i) left[i + 1] = left[i] + mass[i];
  for (std::size_t i = cells; i-- > 0;) right[i] = right[i + 1] + mass[i];
  const double total = left[cells];
  if (!(total > 0.0) || !std::isfinite(total)) throw std::runtime_error("build_inverse_cdf: density has no mass");

  const double w_lo = normal_inv(tail), w_hi = -w_lo;
  std::vector<double> xs(grid_size), slopes(grid_size);
  for (std::size_t n = 0; n < grid_size; ++n) {
    const double w = w_lo + (w_hi - w_lo) * double(n) / double(grid_size - 1);
    const bool upper = w > 0.0;
    // Tail probability being matched, in un-normalised mass units.
    const double target = total * normal_cdf(upper ? -w : w);
    std::size_t i;
    if (!upper) {
      i = std::size_t(std::upper_bound(left.begin(), left.end(), target) - left.begin());
      i = std::clamp<std::size_t>(i, 1, cells) - 1;
    } else {
      // right[] is decreasing; first i with right[i] < target, cell is i - 1
      auto it = std::find_if(right.begin(), right.end(), [&](double r) { return r < target; });
      i = std::clamp<std::size_t>(std::size_t(it - right.begin()), 1, cells) - 1;
    }
    const double a = x_lo + h * i, b = a + h;
    auto g = [&](double x) {
      const double part = GL::integrate(f, a, x);
      return upper ? (right[i + 1] + mass[i] - part) - target : (left[i] + part) - target;
    };
    double lo = a, hi = b;
    double x = a + h * 0.5;
    for (int it = 0; it < 60; ++it) {
      const double gx = g(x);
      const bool below = upper ? gx > 0.0 : gx < 0.0;
      if (below) lo = x; else hi = x;
      const double fx = f(x);
      double next = fx > 0.0 ? x - (upper ? -gx : gx) / fx : 0.5 * (lo + hi);
      if (next == x) break;  // Newton step below one ulp
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      const bool done = std::abs(next - x) <= 1e-14 * (x_hi - x_lo) || hi - lo <= 1e-14 * (x_hi - x_lo);
      x = next;
      if (done) break;
    }
    xs[n] = x;
    slopes[n] = normal_pdf(w) * total / f(x);
  }
  // Fritsch-Carlson limiter so that the Hermite interpolant stays monotone.
  const double dw = (w_hi - w_lo) / double(grid_size - 1);
  for (std::size_t n = 0; n + 1 < grid_size; ++n) {
    const double delta = (xs[n + 1] - xs[n]) / dw;
    if (!(delta > 0.0)) throw std::runtime_error("build_inverse_cdf: quantiles not increasing");
    const double al = slopes[n] / delta, be = slopes[n + 1] / delta;
    const double r2 = al * al + be * be;
    if (r2 > 9.0) {
      const double tau = 3.0 / std::sqrt(r2);
      slopes[n] = tau * al * delta;
      slopes[n + 1] = tau * be * delta;
    }
  }
  return TabulatedInverseCdf(w_lo, w_hi, std::move(xs), std::move(slopes));
}

TabulatedInverseCdf build_terminal_inverse_cdf(const UouParams& p, double x0, double maturity,
                                               std::size_t grid_size) {
  const XWindow w = x_window(p, maturity, x0);
  return build_inverse_cdf([&](double x) { return log_p_x_rho(p, maturity, x0, x); }, w.lo, w.hi,
                           grid_size);
}

namespace {

const QuadratureSpec kCdfSpec{1e-15, 1e-12, 400};

double tail_mass(const UouParams& p, double t, double x0, double a, double b) {
  const double lu0 = log_u_hat(p, x0);
  auto f = [&](double y) { return std::exp(-p.rho() * t + log_u_hat(p, y) - lu0 + log_p_x(p, t, x0, y)); };
  // split at the kernel centre so the adaptive rule sees the peak
  const double m = x0 * std::exp(-p.lambda() * t);
  if (a < m && m < b) return integrate(f, a, m, kCdfSpec) + integrate(f, m, b, kCdfSpec);
  return integrate(f, a, b, kCdfSpec);
}

}  // namespace

double transition_cdf(const UouParams& p, double t, double x0, double x) {
  const XWindow w = x_window(p, t, x0);
  if (x <= w.lo) return 0.0;
  return tail_mass(p, t, x0, w.lo, std::min(x, w.hi));
}

double transition_sf(const UouParams& p, double t, double x0, double x) {
  const XWindow w = x_window(p, t, x0);
  if (x >= w.hi) return 0.0;
  return tail_mass(p, t, x0, std::max(x, w.lo), w.hi);
}

double transition_quantile(const UouParams& p, double t, double x0, double z,
                           const std::function<double(double)>& log_u) {
  const XWindow w = x_window(p, t, x0);
  auto lu = [&](double y) { return log_u ? log_u(y) : log_u_hat(p, y); };
  const double lu0 = lu(x0);
  auto f = [&](double y) { return std::exp(-p.rho() * t + lu(y) - lu0 + log_p_x(p, t, x0, y)); };
  const bool upper = z > 0.0;
  const double target = normal_cdf(upper ? -z : z);
  // Tail mass T(x): lower tail for z <= 0, upper tail otherwise.
  auto tail = [&](double x) { return upper ? integrate(f, x, w.hi, kCdfSpec) : integrate(f, w.lo, x, kCdfSpec); };

  const double m = x0 * std::exp(-p.lambda() * t);
  const double sk = std::sqrt(-std::expm1(-2.0 * p.lambda() * t) / p.kappa());
  double lo = w.lo, hi = w.hi;
  double x = std::clamp(m + sk * z, lo, hi);
  double tx = tail(x);
  for (int it = 0; it < 100; ++it) {
    const double g = tx - target;  // increasing in x for the lower tail, decreasing for the upper
    if (std::abs(g) <= 1e-14 + 1e-11 * target) return x;
    if ((g < 0.0) != upper) lo = x; else hi = x;
    const double fx = f(x);
    double next = fx > 0.0 ? x - (upper ? -g : g) / fx : 0.5 * (lo + hi);
    if (next == x) return x;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-14 * std::max(1.0, std::abs(x))) return next;
    const double step = integrate(f, std::min(x, next), std::max(x, next), kCdfSpec);
    // moving right adds mass to the lower tail and removes it from the upper
    tx += ((next > x) != upper) ? step : -step;
    x = next;
  }
  throw NonConvergence("transition_quantile: no convergence");
}

void write_path_csv(std::ostream& out, const PathBlock& block, const TimeGrid& grid) {
  out << "scenario,time,asset,value\n";
  out.precision(15);
  for (std::size_t m = 0; m < block.n_scenarios; ++m)
    for (std::size_t j = 0; j < block.n_times; ++j)
      for (std::size_t k = 0; k < block.n_assets; ++k)
        out << m << ',' << grid[j] << ',' << k << ',' << block.at(k, j, m) << '\n';
}

namespace {

void check_dims(std::size_t n, std::size_t x0s, std::size_t fac) {
  if (n == 0 || x0s != n || fac != n) throw std::invalid_argument("sampler: dimension mismatch");
}

}  // namespace

BridgeSampler::BridgeSampler(std::vector<UouParams> models, std::vector<double> x0s,
                             FactorizedCorrelation fac, TimeGrid grid, SamplerOptions opts)
    : models_(std::move(models)), x0_(std::move(x0s)), fac_(std::move(fac)), grid_(std::move(grid)),
      opts_(opts) {
  check_dims(models_.size(), x0_.size(), fac_.dim());
  for (std::size_t k = 0; k < models_.size(); ++k)
    tables_.push_back(build_terminal_inverse_cdf(models_[k], x0_[k], grid_.maturity(), opts_.table_size));
  prepare();
}

BridgeSampler::BridgeSampler(std::vector<UouParams> models, std::vector<double> x0s,
                             FactorizedCorrelation fac, std::vector<TabulatedInverseCdf> tables,
                             TimeGrid grid, SamplerOptions opts)
    : models_(std::move(models)), x0_(std::move(x0s)), fac_(std::move(fac)), tables_(std::move(tables)),
      grid_(std::move(grid)), opts_(opts) {
  check_dims(models_.size(), x0_.size(), fac_.dim());
  if (tables_.size() != models_.size()) throw std::invalid_argument("sampler: one table per asset");
  prepare();
}

void BridgeSampler::prepare() {
  const std::size_t n = models_.size(), N = grid_.steps();
  ca_.assign(n * N, 0.0);
  cb_.assign(n * N, 0.0);
  sd_.assign(n * N, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& p = models_[k];
    double sdmax = 0.0;
    for (std::size_t j = 1; j < N; ++j) {
      const double d1 = grid_[j] - grid_[0], d2 = grid_[j + 1] - grid_[j];
      // Coefficients of the bridge mean, linear in (x0, X_{j+1}).
      const auto m0 = bridge_moments(p, d1, d2, 1.0, 0.0);
      const auto m1 = bridge_moments(p, d1, d2, 0.0, 1.0);
      ca_[k * N + j] = m0.mean;
      cb_[k * N + j] = m1.mean;
      sd_[k * N + j] = std::sqrt(m0.variance);
      sdmax = std::max(sdmax, sd_[k * N + j]);
    }
    const auto& v = tables_[k].values();
    const double lo = std::min(v.front(), x0_[k]) - 8.0 * sdmax;
    const double hi = std::max(v.back(), x0_[k]) + 8.0 * sdmax;
    maps_.emplace_back(p, lo, hi, opts_.map_nodes);
  }
}

BridgeSampler::Workspace BridgeSampler::workspace() const {
  const std::size_t n = models_.size();
  return {std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
}

std::uint32_t BridgeSampler::draw(RngStream& rng, Workspace& ws, std::span<double> out, Space space) const {
  const std::size_t n = models_.size(), N = grid_.steps(), nt = N + 1;
  std::uint32_t clamps = 0;
  mvn_sample(fac_, rng, ws.z, ws.g);
  for (std::size_t k = 0; k < n; ++k) {
    if (!tables_[k].in_range(ws.z[k])) ++clamps;
    ws.x[k] = tables_[k].from_score(ws.z[k]);
    out[k * nt + N] = ws.x[k];
    out[k * nt] = x0_[k];
  }
  for (std::size_t j = N - 1; j >= 1; --j) {
    mvn_sample(fac_, rng, ws.z, ws.g);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t c = k * N + j;
      const double x = ca_[c] * x0_[k] + cb_[c] * out[k * nt + j + 1] + sd_[c] * ws.z[k];
      out[k * nt + j] = x;
    }
  }
  if (space == Space::S)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < nt; ++j) out[k * nt + j] = maps_[k].map_f(out[k * nt + j]);
  return clamps;
}

SequentialSampler::SequentialSampler(std::vector<UouParams> models, std::vector<double> x0s,
                                     FactorizedCorrelation fac, TimeGrid grid, SamplerOptions opts)
    : models_(std::move(models)), x0_(std::move(x0s)), fac_(std::move(fac)), grid_(std::move(grid)),
      opts_(opts) {
  check_dims(models_.size(), x0_.size(), fac_.dim());
  for (std::size_t k = 0; k < models_.size(); ++k) {
    const XWindow w = x_window(models_[k], grid_.maturity(), x0_[k]);
    maps_.emplace_back(models_[k], w.lo, w.hi, opts_.map_nodes);
  }
}

SequentialSampler::Workspace SequentialSampler::workspace() const {
  const std::size_t n = models_.size();
  return {std::vector<double>(n), std::vector<double>(n)};
}

std::uint32_t SequentialSampler::draw(RngStream& rng, Workspace& ws, std::span<double> out,
                                      Space space) const {
  const std::size_t n = models_.size(), N = grid_.steps(), nt = N + 1;
  for (std::size_t k = 0; k < n; ++k) out[k * nt] = x0_[k];
  for (std::size_t j = 1; j <= N; ++j) {
    mvn_sample(fac_, rng, ws.z, ws.g);
    const double dt = grid_[j] - grid_[j - 1];
    for (std::size_t k = 0; k < n; ++k) {
      const auto& map = maps_[k];
      out[k * nt + j] = transition_quantile(models_[k], dt, out[k * nt + j - 1], ws.z[k],
                                            [&map](double y) { return map.log_u_hat(y); });
    }
  }
  if (space == Space::S)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < nt; ++j) out[k * nt + j] = maps_[k].map_f(out[k * nt + j]);
  return 0;
}

std::vector<double> sample_terminal(const std::vector<UouParams>& models, const std::vector<double>& x0s,
                                    const FactorizedCorrelation& fac,
                                    const std::vector<TabulatedInverseCdf>& tables, RngStream& rng,
                                    std::uint64_t* clamps) {
  const std::size_t n = models.size();
  check_dims(n, x0s.size(), fac.dim());
  if (tables.size() != n) throw std::invalid_argument("sample_terminal: one table per asset");
  std::vector<double> z(n), g(n), x(n);
  mvn_sample(fac, rng, z, g);
  for (std::size_t k = 0; k < n; ++k) {
    if (clamps && !tables[k].in_range(z[k])) ++*clamps;
    x[k] = tables[k].from_score(z[k]);
  }
  return x;
}

namespace {

template <class Sampler>
PathBlock collect(const Sampler& s, std::size_t n_scenarios, std::size_t workers, const RngStream& rng,
                  Space space) {
  PathBlock block(s.assets(), s.grid().steps() + 1, n_scenarios, space);
  struct None {};
  auto [accs, clamps] = simulate_blocks(
      s, n_scenarios, workers, rng, [] { return None{}; },
      [&](None&, std::span<const double> path, std::size_t m) {
        std::copy(path.begin(), path.end(), block.scenario(m).begin());
      },
      space);
  block.clamps = clamps;
  return block;
}

}  // namespace

PathBlock sample_path_bridge(const std::vector<UouParams>& models, const std::vector<double>& x0s,
                             const FactorizedCorrelation& fac,
                             const std::vector<TabulatedInverseCdf>& tables, const TimeGrid& grid,
                             std::size_t n_scenarios, std::size_t workers, const RngStream& rng,
                             Space space) {
  BridgeSampler s(models, x0s, fac, tables, grid);
  return collect(s, n_scenarios, workers, rng, space);
}

PathBlock sample_path_sequential(const std::vector<UouParams>& models, const std::vector<double>& x0s,
                                 const FactorizedCorrelation& fac, const TimeGrid& grid,
                                 std::size_t n_scenarios, std::size_t workers, const RngStream& rng,
                                 Space space) {
  SequentialSampler s(models, x0s, fac, grid);
  return collect(s, n_scenarios, workers, rng, space);
}

}  // namespace bcm
