#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bcm/calib.hpp"
#include "bcm/errors.hpp"
#include "bcm/parallel.hpp"
#include "bcm/sampler.hpp"
#include "bcm/specfun.hpp"

namespace bcm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Normal score of P(X_t <= x | X_0 = x0); the smaller tail is used so that
// scores far out on either side keep their precision.
double transition_score(const UouParams& p, double t, double x0, double x, std::size_t& clipped) {
  const double lower = transition_cdf(p, t, x0, x);
  double w;
  if (lower <= 0.5) {
    w = lower > 0.0 ? normal_inv(lower) : -kInf;
  } else {
    const double upper = transition_sf(p, t, x0, x);
    w = upper > 0.0 ? -normal_inv(upper) : kInf;
  }
  if (!(std::abs(w) <= kScoreClip)) {
    ++clipped;
    w = std::copysign(kScoreClip, w);
  }
  return w;
}

}  // namespace

CopulaScores copula_scores(std::span<const UouParams> fitted, const HistoricalSeries& s,
                           LikelihoodMethod method) {
  validate_series(s);
  const std::size_t n = s.assets(), N = s.size() - 1;
  if (fitted.size() != n) throw std::invalid_argument("copula_scores: one parameter set per asset");
  CopulaScores out;
  out.w.resize(Eigen::Index(N), Eigen::Index(n));
  const auto& t = s.times;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& p = fitted[k];
    std::vector<double> x(N + 1);
    x[0] = inverse_map(p, s.prices[k][0]);
    for (std::size_t j = 1; j <= N; ++j) x[j] = inverse_map(p, s.prices[k][j], x[j - 1]);

    if (method == LikelihoodMethod::Sequential) {
      for (std::size_t j = 1; j <= N; ++j) {
        out.w(Eigen::Index(j - 1), Eigen::Index(k)) = transition_score(p, t[j] - t[j - 1], x[j - 1], x[j], out.clipped);
        ++out.cdf_evaluations;
      }
    } else {
      out.w(0, Eigen::Index(k)) = transition_score(p, t[N] - t[0], x[0], x[N], out.clipped);
      ++out.cdf_evaluations;
      for (std::size_t j = 1; j < N; ++j) {
        const auto m = bridge_moments(p, t[j] - t[0], t[j + 1] - t[j], x[0], x[j + 1]);
        double w = (x[j] - m.mean) / std::sqrt(m.variance);
        if (!(std::abs(w) <= kScoreClip)) {
          ++out.clipped;
          w = std::copysign(kScoreClip, w);
        }
        out.w(Eigen::Index(j), Eigen::Index(k)) = w;
      }
    }
  }
  return out;
}

double gaussian_loglik(const Eigen::MatrixXd& r, const Eigen::MatrixXd& w) {
  if (r.rows() != w.cols()) throw std::invalid_argument("gaussian_loglik: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Eigen::MatrixXd z = llt.matrixL().solve(w.transpose());
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < r.rows(); ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  const double m = double(w.rows()), n = double(w.cols());
  return -0.5 * z.squaredNorm() - 0.5 * m * (logdet + n * kLog2Pi);
}

double copula_loglik(const Eigen::MatrixXd& r, const Eigen::MatrixXd& w) {
  const double marg = -0.5 * w.squaredNorm() - 0.5 * double(w.size()) * kLog2Pi;
  return gaussian_loglik(r, w) - marg;
}

double loglik_corr(const CorrelationMatrix& r, std::span<const UouParams> fitted, const HistoricalSeries& s,
                   LikelihoodMethod method) {
  return gaussian_loglik(r.matrix(), copula_scores(fitted, s, method).w);
}

double loglik_joint(const CorrelationMatrix& r, std::span<const UouParams> fitted, const HistoricalSeries& s,
                    LikelihoodMethod method) {
  double l = copula_loglik(r.matrix(), copula_scores(fitted, s, method).w);
  for (std::size_t k = 0; k < s.assets(); ++k) l += loglik_single(fitted[k], s.times, s.prices[k], method);
  return l;
}

double fit_pair_theta(const Eigen::MatrixXd& w2, double tol) {
  if (w2.cols() != 2) throw std::invalid_argument("fit_pair_theta: need two columns");
  const double saa = w2.col(0).squaredNorm(), sbb = w2.col(1).squaredNorm();
  const double sab = w2.col(0).dot(w2.col(1)), m = double(w2.rows());
  auto l = [&](double th) {
    const double d = 1.0 - th * th;
    return -0.5 * (saa - 2.0 * th * sab + sbb) / d - 0.5 * m * std::log(d);
  };
  return golden_max(l, -0.999, 0.999, tol);
}

CorrFitResult fit_corr_pairwise(const Eigen::MatrixXd& scores, std::size_t workers) {
  const std::size_t n = std::size_t(scores.cols());
  if (n < 2) throw std::invalid_argument("fit_corr_pairwise: need at least two assets");
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  std::vector<double> theta(pairs.size());
  for_each_block(pairs.size(), 1, workers, [&](std::size_t b, std::size_t, std::size_t) {
    Eigen::MatrixXd w2(scores.rows(), 2);
    w2.col(0) = scores.col(Eigen::Index(pairs[b].first));
    w2.col(1) = scores.col(Eigen::Index(pairs[b].second));
    theta[b] = fit_pair_theta(w2);
  });
  Eigen::MatrixXd cand = Eigen::MatrixXd::Identity(Eigen::Index(n), Eigen::Index(n));
  for (std::size_t b = 0; b < pairs.size(); ++b) {
    cand(Eigen::Index(pairs[b].first), Eigen::Index(pairs[b].second)) = theta[b];
    cand(Eigen::Index(pairs[b].second), Eigen::Index(pairs[b].first)) = theta[b];
  }
  CorrFitResult out{cand, nearest_correlation_spectral(cand)};
  out.loglik = gaussian_loglik(out.matrix.matrix(), scores);
  out.iterations = pairs.size();
  return out;
}

CorrFitResult fit_corr_pairwise(std::span<const UouParams> fitted, const HistoricalSeries& s,
                                LikelihoodMethod method, std::size_t workers) {
  const auto sc = copula_scores(fitted, s, method);
  auto out = fit_corr_pairwise(sc.w, workers);
  out.cdf_evaluations = sc.cdf_evaluations;
  out.clipped = sc.clipped;
  return out;
}

namespace {

// R from the packed rows 1..n-1 of a lower-triangular factor (row 0 is e_1);
// each row is normalised, so R has a unit diagonal and is PSD by construction.
Eigen::MatrixXd unpack_correlation(const std::vector<double>& v, std::size_t n) {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
  l(0, 0) = 1.0;
  std::size_t pos = 0;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) l(Eigen::Index(i), Eigen::Index(j)) = v[pos++];
    const double norm = l.row(Eigen::Index(i)).norm();
    if (norm > 0.0) l.row(Eigen::Index(i)) /= norm;
  }
  return l * l.transpose();
}

}  // namespace

CorrFitResult fit_corr_full(const Eigen::MatrixXd& scores, const CorrelationMatrix& init,
                            const NelderMeadOptions& opts) {
  const std::size_t n = std::size_t(scores.cols());
  if (n < 2 || init.dim() != n) throw std::invalid_argument("fit_corr_full: dimension mismatch");
  // A tiny ridge makes the Cholesky factor exist for semidefinite starts.
  const double ridge = 1e-10;
  Eigen::MatrixXd a = init.matrix() + ridge * Eigen::MatrixXd::Identity(Eigen::Index(n), Eigen::Index(n));
  Eigen::LLT<Eigen::MatrixXd> llt(a / (1.0 + ridge));
  if (llt.info() != Eigen::Success) throw std::invalid_argument("fit_corr_full: init is not positive semidefinite");
  const Eigen::MatrixXd l0 = llt.matrixL();

  std::vector<double> x0, lo, hi;
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      x0.push_back(l0(Eigen::Index(i), Eigen::Index(j)));
      lo.push_back(j == i ? 1e-3 : -1.0);
      hi.push_back(1.0);
    }
  auto objective = [&](const std::vector<double>& v) {
    const double l = gaussian_loglik(unpack_correlation(v, n), scores);
    return std::isfinite(l) ? -l : std::numeric_limits<double>::infinity();
  };
  // the start must stay a vertex so the result can never be worse than init
  for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = std::clamp(x0[i], lo[i], hi[i]);
  const auto r = minimize_bounded(objective, x0, lo, hi, opts);
  const Eigen::MatrixXd cand = unpack_correlation(r.x, n);
  CorrFitResult out{cand, nearest_correlation_spectral(cand)};
  out.loglik = gaussian_loglik(out.matrix.matrix(), scores);
  out.iterations = r.iterations;
  out.converged = r.converged;
  return out;
}

CorrFitResult fit_corr_full(std::span<const UouParams> fitted, const HistoricalSeries& s,
                            LikelihoodMethod method, const CorrelationMatrix& init,
                            const NelderMeadOptions& opts) {
  const auto sc = copula_scores(fitted, s, method);
  auto out = fit_corr_full(sc.w, init, opts);
  out.cdf_evaluations = sc.cdf_evaluations;
  out.clipped = sc.clipped;
  return out;
}

}  // namespace bcm
