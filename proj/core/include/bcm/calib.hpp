#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bcm/corrmat.hpp"
#include "bcm/optimize.hpp"
#include "bcm/uou.hpp"

namespace bcm {

// ---- data ----

struct OptionQuote {
  double strike = 0.0;
  double maturity = 0.0;
  double price = 0.0;
  std::optional<double> bid, ask;
};

// Throws DataError.
void validate_quotes(std::span<const OptionQuote> quotes);

// Aligned price history: prices[k][j] is asset k at times[j] (year fractions).
struct HistoricalSeries {
  std::vector<double> times;
  std::vector<std::vector<double>> prices;

  std::size_t assets() const { return prices.size(); }
  std::size_t size() const { return times.size(); }
  // Single-asset view of asset k.
  HistoricalSeries asset(std::size_t k) const;
  HistoricalSeries select(std::span<const std::size_t> ks) const;
};

// Throws DataError unless times increase strictly, every asset has one
// positive price per time and there are at least two observations.
void validate_series(const HistoricalSeries& s);

inline constexpr double kTradingDaysPerYear = 252.0;

// ---- parameter vector (rho, upsilon, c, kappa) ----

using FitVector = std::array<double, 4>;

struct ParamBounds {
  FitVector lower{0.001, 0.005, 45.0, 0.5};
  FitVector upper{0.5, 2.0, 250.0, 10.0};
  bool contains(const FitVector& v) const;
};

inline constexpr FitVector kDefaultInit{0.04, 0.34, 102.59, 1.0};

FitVector to_fit_vector(const UouParams& p);
UouParams from_fit_vector(const FitVector& v, double rate);

struct CalibrationResult {
  UouParams params;
  double objective = 0.0;
  std::optional<double> alpha;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
  ParamBounds bounds;
  std::string method;
};

// ---- Black-Scholes helpers ----

double bs_price(double spot, double strike, double rate, double vol, double maturity);
double bs_vega(double spot, double strike, double rate, double vol, double maturity);
// Throws std::domain_error when price is outside the no-arbitrage bounds.
double bs_implied_vol(double price, double spot, double strike, double rate, double maturity);

// ---- option-quote least squares ----

enum class WeightScheme { Spread, Vega };

// Spread: 1/|ask - bid|. Vega: (BS vega at the implied vol)^-2.
std::vector<double> make_weights(std::span<const OptionQuote> quotes, WeightScheme scheme, double spot,
                                 double rate);

// Model call prices for the quotes, by quadrature in x.
std::vector<double> model_prices(const UouParams& p, std::span<const OptionQuote> quotes, double spot);

// sum_i w_i (C_i - O_i)^2
double lse_objective(const UouParams& p, std::span<const OptionQuote> quotes, std::span<const double> weights,
                     double spot);

// Relative entropy of the terminal law of P w.r.t. that of Q, both started at
// spot, at the given horizon. Computed in the x-coordinate of P.
double relative_entropy(const UouParams& p, const UouParams& q, double horizon, double spot);

// alpha in [1e-6, 1e3] with f + alpha h = delta f, by bisection. Throws
// NonConvergence with the endpoint values when there is no sign change.
double morozov_alpha(double f, double h, double delta);
// f = F(xi0) and h = H(xi0, anchor) at the longest quoted maturity.
double morozov_alpha(const UouParams& xi0, const UouParams& anchor, std::span<const OptionQuote> quotes,
                     std::span<const double> weights, double spot, double delta);

struct LseFitOptions {
  ParamBounds bounds;
  FitVector init = kDefaultInit;
  double alpha = 0.0;
  // Entropy anchor; required when alpha > 0.
  std::optional<UouParams> anchor;
  NelderMeadOptions optimizer;
};

CalibrationResult fit_single_lse(std::span<const OptionQuote> quotes, std::span<const double> weights,
                                 double spot, double rate, const LseFitOptions& opts = {});

// ---- historical likelihoods ----

enum class LikelihoodMethod { Sequential, Bridge };

// Per-observation log densities ln f_j of S_j (j = 1..N), including the
// Jacobian 1/F'(X_j). Sequential: chained transitions. Bridge: the terminal
// point from S_0 over the full horizon, then X_j given (X_0, X_{j+1}).
// Throws DataError on invalid input.
std::vector<double> log_density_terms(const UouParams& p, std::span<const double> times,
                                      std::span<const double> prices, LikelihoodMethod method);

double loglik_single(const UouParams& p, std::span<const double> times, std::span<const double> prices,
                     LikelihoodMethod method);
double loglik_single(const UouParams& p, const HistoricalSeries& s, LikelihoodMethod method);

struct MleFitOptions {
  ParamBounds bounds;
  FitVector init = kDefaultInit;
  LikelihoodMethod method = LikelihoodMethod::Sequential;
  NelderMeadOptions optimizer;
};

// Maximises loglik_single; objective holds the maximised log-likelihood.
CalibrationResult fit_single_mle(const HistoricalSeries& s, double rate, const MleFitOptions& opts = {});

// ---- copula likelihood ----

// Normal scores of the observations, one row per likelihood term and one
// column per asset. Sequential: N rows of N^{-1}(Phi_j(X_j)). Bridge: the
// terminal score first, then the standardised bridge residuals for j=1..N-1.
struct CopulaScores {
  Eigen::MatrixXd w;
  // Quadrature-based transition CDF evaluations used.
  std::size_t cdf_evaluations = 0;
  // Scores clipped to +-8.
  std::size_t clipped = 0;
};

inline constexpr double kScoreClip = 8.0;

CopulaScores copula_scores(std::span<const UouParams> fitted, const HistoricalSeries& s,
                           LikelihoodMethod method);

// sum_j ln phi_R(w_j)
double gaussian_loglik(const Eigen::MatrixXd& r, const Eigen::MatrixXd& w);
// sum_j [ln phi_R(w_j) - sum_k ln phi(w_jk)], the log copula density. This is
// the piece that adds to the marginal likelihoods to give the joint one.
double copula_loglik(const Eigen::MatrixXd& r, const Eigen::MatrixXd& w);

// L^corr(R | xi) = sum_j ln phi_R(scores_j).
double loglik_corr(const CorrelationMatrix& r, std::span<const UouParams> fitted, const HistoricalSeries& s,
                   LikelihoodMethod method);

// Joint log-likelihood of the n-asset series: copula part plus marginals.
double loglik_joint(const CorrelationMatrix& r, std::span<const UouParams> fitted, const HistoricalSeries& s,
                    LikelihoodMethod method);

struct CorrFitResult {
  Eigen::MatrixXd candidate;  // before repair
  CorrelationMatrix matrix;   // after nearest_correlation_spectral
  double loglik = 0.0;        // gaussian_loglik at `matrix`
  std::size_t iterations = 0;
  bool converged = true;
  std::size_t cdf_evaluations = 0;
  std::size_t clipped = 0;
};

// Maximises sum_j ln phi_R over a 2x2 theta in (-0.999, 0.999).
double fit_pair_theta(const Eigen::MatrixXd& w2, double tol = 1e-7);

CorrFitResult fit_corr_pairwise(std::span<const UouParams> fitted, const HistoricalSeries& s,
                                LikelihoodMethod method, std::size_t workers = 1);
CorrFitResult fit_corr_pairwise(const Eigen::MatrixXd& scores, std::size_t workers = 1);

CorrFitResult fit_corr_full(std::span<const UouParams> fitted, const HistoricalSeries& s,
                            LikelihoodMethod method, const CorrelationMatrix& init,
                            const NelderMeadOptions& opts = {});
CorrFitResult fit_corr_full(const Eigen::MatrixXd& scores, const CorrelationMatrix& init,
                            const NelderMeadOptions& opts = {});

}  // namespace bcm
