#include "bcm/calib.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bcm/errors.hpp"
#include "bcm/specfun.hpp"

namespace bcm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLogTiny = std::log(1e-300);

std::string num(double v) {
  std::ostringstream o;
  o.precision(10);
  o << v;
  return o.str();
}

// ln F'(x), using F'/F and ln F so that neither overflows.
double log_map_f_prime(const UouParams& p, double x) {
  return std::log(log_map_f_deriv(p, x)) + log_map_f(p, x);
}

double max_maturity(std::span<const OptionQuote> quotes) {
  double t = 0.0;
  for (const auto& q : quotes) t = std::max(t, q.maturity);
  return t;
}

}  // namespace

void validate_quotes(std::span<const OptionQuote> quotes) {
  if (quotes.empty()) throw DataError("quotes: empty set");
  for (std::size_t i = 0; i < quotes.size(); ++i) {
    const auto& q = quotes[i];
    const std::string where = "quote " + std::to_string(i) + ": ";
    if (!(q.strike > 0.0)) throw DataError(where + "strike must be positive");
    if (!(q.maturity > 0.0)) throw DataError(where + "maturity must be positive");
    if (!(q.price > 0.0)) throw DataError(where + "price must be positive");
    if (q.bid && q.ask && !(*q.bid <= q.price && q.price <= *q.ask))
      throw DataError(where + "need bid <= price <= ask");
  }
}

HistoricalSeries HistoricalSeries::asset(std::size_t k) const {
  if (k >= prices.size()) throw std::out_of_range("HistoricalSeries::asset: index out of range");
  return HistoricalSeries{times, {prices[k]}};
}

HistoricalSeries HistoricalSeries::select(std::span<const std::size_t> ks) const {
  HistoricalSeries out{times, {}};
  for (std::size_t k : ks) {
    if (k >= prices.size()) throw std::out_of_range("HistoricalSeries::select: index out of range");
    out.prices.push_back(prices[k]);
  }
  return out;
}

void validate_series(const HistoricalSeries& s) {
  if (s.times.size() < 2) throw DataError("series: need at least two observations");
  if (s.prices.empty()) throw DataError("series: no assets");
  for (std::size_t j = 1; j < s.times.size(); ++j)
    if (!(s.times[j] > s.times[j - 1])) throw DataError("series: times must increase strictly");
  for (std::size_t k = 0; k < s.prices.size(); ++k) {
    if (s.prices[k].size() != s.times.size())
      throw DataError("series: asset " + std::to_string(k) + " has the wrong number of prices");
    for (double v : s.prices[k])
      if (!(v > 0.0) || !std::isfinite(v))
        throw DataError("series: asset " + std::to_string(k) + " has a non-positive price");
  }
}

bool ParamBounds::contains(const FitVector& v) const {
  for (std::size_t i = 0; i < 4; ++i)
    if (!(v[i] >= lower[i] && v[i] <= upper[i])) return false;
  return true;
}

FitVector to_fit_vector(const UouParams& p) { return {p.rho(), p.upsilon(), p.c(), p.kappa()}; }

UouParams from_fit_vector(const FitVector& v, double rate) {
  return UouParams::from_fit(v[0], v[1], v[2], v[3], rate);
}

// ---- Black-Scholes ----

double bs_price(double spot, double strike, double rate, double vol, double maturity) {
  if (!(spot > 0.0 && strike > 0.0 && maturity > 0.0 && vol >= 0.0))
    throw std::domain_error("bs_price: need positive spot, strike, maturity and vol >= 0");
  const double df = std::exp(-rate * maturity);
  if (vol == 0.0) return std::max(spot - strike * df, 0.0);
  const double sd = vol * std::sqrt(maturity);
  const double d1 = (std::log(spot / strike) + rate * maturity) / sd + 0.5 * sd;
  return spot * normal_cdf(d1) - strike * df * normal_cdf(d1 - sd);
}

double bs_vega(double spot, double strike, double rate, double vol, double maturity) {
  if (!(spot > 0.0 && strike > 0.0 && maturity > 0.0 && vol > 0.0))
    throw std::domain_error("bs_vega: need positive inputs");
  const double sd = vol * std::sqrt(maturity);
  const double d1 = (std::log(spot / strike) + rate * maturity) / sd + 0.5 * sd;
  return spot * normal_pdf(d1) * std::sqrt(maturity);
}

double bs_implied_vol(double price, double spot, double strike, double rate, double maturity) {
  const double lower = std::max(spot - strike * std::exp(-rate * maturity), 0.0);
  if (!(price > lower && price < spot))
    throw std::domain_error("bs_implied_vol: price " + num(price) + " outside (" + num(lower) + ", " +
                            num(spot) + ")");
  auto g = [&](double v) { return bs_price(spot, strike, rate, v, maturity) - price; };
  double hi = 1.0;
  while (g(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 1e3) throw std::domain_error("bs_implied_vol: no volatility reaches the price");
  }
  return find_root(g, 0.0, hi, 1e-12);
}

// ---- least squares ----

std::vector<double> make_weights(std::span<const OptionQuote> quotes, WeightScheme scheme, double spot,
                                 double rate) {
  std::vector<double> w(quotes.size());
  for (std::size_t i = 0; i < quotes.size(); ++i) {
    const auto& q = quotes[i];
    if (scheme == WeightScheme::Spread) {
      if (!q.bid || !q.ask) throw DataError("make_weights: quote " + std::to_string(i) + " has no bid/ask");
      const double spread = std::abs(*q.ask - *q.bid);
      if (!(spread > 0.0)) throw DataError("make_weights: quote " + std::to_string(i) + " has zero spread");
      w[i] = 1.0 / spread;
    } else {
      const double vol = bs_implied_vol(q.price, spot, q.strike, rate, q.maturity);
      const double vega = bs_vega(spot, q.strike, rate, vol, q.maturity);
      if (!(vega > 0.0)) throw DataError("make_weights: zero vega for quote " + std::to_string(i));
      w[i] = 1.0 / (vega * vega);
    }
  }
  return w;
}

std::vector<double> model_prices(const UouParams& p, std::span<const OptionQuote> quotes, double spot) {
  std::vector<double> out(quotes.size());
  for (std::size_t i = 0; i < quotes.size(); ++i) {
    const double k = quotes[i].strike;
    const double kinks[1] = {k};
    out[i] = price_european_quadrature(
        p, [k](double s) { return s > k ? s - k : 0.0; }, spot, quotes[i].maturity, {}, kinks);
  }
  return out;
}

double lse_objective(const UouParams& p, std::span<const OptionQuote> quotes, std::span<const double> weights,
                     double spot) {
  if (weights.size() != quotes.size()) throw std::invalid_argument("lse_objective: one weight per quote");
  const auto c = model_prices(p, quotes, spot);
  double f = 0.0;
  for (std::size_t i = 0; i < quotes.size(); ++i) {
    const double r = c[i] - quotes[i].price;
    f += weights[i] * r * r;
  }
  return f;
}

double relative_entropy(const UouParams& p, const UouParams& q, double horizon, double spot) {
  if (p.rate() != q.rate()) throw std::invalid_argument("relative_entropy: rates differ");
  const double x0p = inverse_map(p, spot);
  const double x0q = inverse_map(q, spot);
  const XWindow win = x_window(p, horizon, x0p);
  double hint = x0q;
  auto integrand = [&](double x) {
    const double lpp = log_p_x_rho(p, horizon, x0p, x);
    if (!(lpp > kLogTiny)) return 0.0;
    const double lsp = lpp - log_map_f_prime(p, x);
    double lsq = kLogTiny;
    try {
      const double xq = inverse_map(q, map_f(p, x), hint);
      hint = xq;
      lsq = std::max(log_p_x_rho(q, horizon, x0q, xq) - log_map_f_prime(q, xq), kLogTiny);
    } catch (const std::exception&) {
      // s outside the range Q can represent: density there is taken as zero
    }
    return std::exp(lpp) * (lsp - lsq);
  };
  const double m = x0p * std::exp(-p.lambda() * horizon);
  const QuadratureSpec spec{1e-12, 1e-9, 400};
  if (win.lo < m && m < win.hi) return integrate(integrand, win.lo, m, spec) + integrate(integrand, m, win.hi, spec);
  return integrate(integrand, win.lo, win.hi, spec);
}

double morozov_alpha(double f, double h, double delta) {
  if (!(delta > 1.0 && delta < 1.5)) throw std::invalid_argument("morozov_alpha: delta must be in (1, 1.5)");
  auto g = [&](double a) { return f + a * h - delta * f; };
  double lo = 1e-6, hi = 1e3;
  const double glo = g(lo), ghi = g(hi);
  if (!(glo <= 0.0 && ghi >= 0.0) && !(glo >= 0.0 && ghi <= 0.0))
    throw NonConvergence("morozov_alpha: no root in [1e-6, 1e3]; g(1e-6) = " + num(glo) +
                         ", g(1e3) = " + num(ghi));
  const bool rising = glo < ghi;
  for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    ((g(mid) < 0.0) == rising ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double morozov_alpha(const UouParams& xi0, const UouParams& anchor, std::span<const OptionQuote> quotes,
                     std::span<const double> weights, double spot, double delta) {
  validate_quotes(quotes);
  const double f = lse_objective(xi0, quotes, weights, spot);
  const double h = relative_entropy(xi0, anchor, max_maturity(quotes), spot);
  return morozov_alpha(f, h, delta);
}

namespace {

std::vector<double> to_vec(const FitVector& v) { return {v.begin(), v.end()}; }

FitVector to_fit(const std::vector<double>& v) { return {v[0], v[1], v[2], v[3]}; }

}  // namespace

CalibrationResult fit_single_lse(std::span<const OptionQuote> quotes, std::span<const double> weights,
                                 double spot, double rate, const LseFitOptions& opts) {
  validate_quotes(quotes);
  if (weights.size() != quotes.size()) throw std::invalid_argument("fit_single_lse: one weight per quote");
  if (opts.alpha < 0.0) throw std::invalid_argument("fit_single_lse: alpha must be >= 0");
  if (opts.alpha > 0.0 && !opts.anchor) throw std::invalid_argument("fit_single_lse: alpha > 0 needs an anchor");
  const double horizon = max_maturity(quotes);

  auto objective = [&](const std::vector<double>& v) {
    try {
      const UouParams p = from_fit_vector(to_fit(v), rate);
      double f = lse_objective(p, quotes, weights, spot);
      if (opts.alpha > 0.0) f += opts.alpha * relative_entropy(p, *opts.anchor, horizon, spot);
      return std::isfinite(f) ? f : kInf;
    } catch (const std::exception&) {
      return kInf;
    }
  };
  const auto r = minimize_bounded(objective, to_vec(opts.init), to_vec(opts.bounds.lower),
                                  to_vec(opts.bounds.upper), opts.optimizer);
  if (!std::isfinite(r.value)) throw NonConvergence("fit_single_lse: no feasible parameter set found");
  CalibrationResult out{from_fit_vector(to_fit(r.x), rate), 0.0, std::nullopt, 0, 0, false, opts.bounds, {}};
  out.objective = r.value;
  if (opts.alpha > 0.0) out.alpha = opts.alpha;
  out.iterations = r.iterations;
  out.evaluations = r.evaluations;
  out.converged = r.converged;
  out.bounds = opts.bounds;
  out.method = "lse";
  return out;
}

// ---- likelihood ----

std::vector<double> log_density_terms(const UouParams& p, std::span<const double> times,
                                      std::span<const double> prices, LikelihoodMethod method) {
  if (times.size() < 2 || prices.size() != times.size())
    throw DataError("likelihood: need at least two aligned observations");
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (!(prices[j] > 0.0)) throw DataError("likelihood: non-positive price");
    if (j > 0 && !(times[j] > times[j - 1])) throw DataError("likelihood: times must increase strictly");
  }
  const std::size_t n = times.size() - 1;
  std::vector<double> x(n + 1);
  x[0] = inverse_map(p, prices[0]);
  for (std::size_t j = 1; j <= n; ++j) x[j] = inverse_map(p, prices[j], x[j - 1]);

  std::vector<double> out(n);
  if (method == LikelihoodMethod::Sequential) {
    for (std::size_t j = 1; j <= n; ++j)
      out[j - 1] = log_p_x_rho(p, times[j] - times[j - 1], x[j - 1], x[j]) - log_map_f_prime(p, x[j]);
    return out;
  }
  out[n - 1] = log_p_x_rho(p, times[n] - times[0], x[0], x[n]) - log_map_f_prime(p, x[n]);
  for (std::size_t j = 1; j < n; ++j) {
    const auto m = bridge_moments(p, times[j] - times[0], times[j + 1] - times[j], x[0], x[j + 1]);
    const double z = (x[j] - m.mean) / std::sqrt(m.variance);
    out[j - 1] = -0.5 * z * z - 0.5 * std::log(2.0 * M_PI * m.variance) - log_map_f_prime(p, x[j]);
  }
  return out;
}

double loglik_single(const UouParams& p, std::span<const double> times, std::span<const double> prices,
                     LikelihoodMethod method) {
  double s = 0.0;
  for (double v : log_density_terms(p, times, prices, method)) s += v;
  return s;
}

double loglik_single(const UouParams& p, const HistoricalSeries& s, LikelihoodMethod method) {
  if (s.assets() != 1) throw DataError("loglik_single: series must hold exactly one asset");
  return loglik_single(p, s.times, s.prices[0], method);
}

CalibrationResult fit_single_mle(const HistoricalSeries& s, double rate, const MleFitOptions& opts) {
  validate_series(s);
  if (s.assets() != 1) throw DataError("fit_single_mle: series must hold exactly one asset");
  auto objective = [&](const std::vector<double>& v) {
    try {
      const double l = loglik_single(from_fit_vector(to_fit(v), rate), s.times, s.prices[0], opts.method);
      return std::isfinite(l) ? -l : kInf;
    } catch (const std::exception&) {
      return kInf;
    }
  };
  const auto r = minimize_bounded(objective, to_vec(opts.init), to_vec(opts.bounds.lower),
                                  to_vec(opts.bounds.upper), opts.optimizer);
  if (!std::isfinite(r.value)) throw NonConvergence("fit_single_mle: no feasible parameter set found");
  CalibrationResult out{from_fit_vector(to_fit(r.x), rate), 0.0, std::nullopt, 0, 0, false, opts.bounds, {}};
  out.objective = -r.value;
  out.iterations = r.iterations;
  out.evaluations = r.evaluations;
  out.converged = r.converged;
  out.bounds = opts.bounds;
  out.method = opts.method == LikelihoodMethod::Sequential ? "mle-sequential" : "mle-bridge";
  return out;
}

}  // namespace bcm
