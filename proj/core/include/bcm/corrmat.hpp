#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bcm/rng.hpp"

namespace bcm {

class CorrelationMatrix {
 public:
  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

  friend CorrelationMatrix validate_correlation(const Eigen::MatrixXd& entries);

 private:
  explicit CorrelationMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {}
  Eigen::MatrixXd m_;
};

// Throws std::invalid_argument naming the violated invariant.
CorrelationMatrix validate_correlation(const Eigen::MatrixXd& entries);

CorrelationMatrix identity_correlation(std::size_t n);
// 2x2 matrix with off-diagonal theta.
CorrelationMatrix pair_correlation(double theta);
CorrelationMatrix leading_submatrix(const CorrelationMatrix& r, std::size_t n);

// Clip negative eigenvalues, rebuild, rescale by D^{-1/2} on both sides.
CorrelationMatrix nearest_correlation_spectral(const Eigen::MatrixXd& candidate);

// Gram matrix of n random unit vectors in R^n.
CorrelationMatrix random_correlation_gram(std::size_t n, std::uint64_t seed);

// R = L L^T. L is the Cholesky factor when R is positive definite; for
// semidefinite R it is V sqrt(Lambda) from the eigendecomposition (square,
// not triangular).
struct FactorizedCorrelation {
  Eigen::MatrixXd factor;
  bool triangular = true;
  std::size_t dim() const { return static_cast<std::size_t>(factor.rows()); }
};

FactorizedCorrelation factorize(const CorrelationMatrix& r);

// z = L g with g iid standard normal. scratch must hold dim() values.
void mvn_sample(const FactorizedCorrelation& fac, RngStream& rng, std::span<double> out,
                std::span<double> scratch);
std::vector<double> mvn_sample(const FactorizedCorrelation& fac, RngStream& rng);

// Monte Carlo estimate of N_R(N^{-1}(u_1), ..., N^{-1}(u_n)).
double gaussian_copula_cdf(const CorrelationMatrix& r, std::span<const double> u,
                           std::size_t mc_samples, RngStream& rng);

// Plain CSV: n rows of n comma-separated values.
Eigen::MatrixXd read_matrix_csv(const std::string& path);
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd parse_matrix_csv(const std::string& text);
std::string format_matrix_csv(const Eigen::MatrixXd& m);

}  // namespace bcm
