#include "bcm/corrmat.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bcm/errors.hpp"
#include "bcm/specfun.hpp"

namespace bcm {

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw std::invalid_argument("correlation matrix: " + what);
}

}  // namespace

CorrelationMatrix validate_correlation(const Eigen::MatrixXd& m) {
  const auto n = m.rows();
  if (n == 0 || m.cols() != n) invalid("not square");
  if (!m.allFinite()) invalid("non-finite entry");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(m(i, i) - 1.0) > 1e-12) {
      std::ostringstream os;
      os << "diagonal entry " << i << " is " << m(i, i) << ", not 1";
      invalid(os.str());
    }
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(m(i, j) - m(j, i)) > 1e-12) {
        std::ostringstream os;
        os << "asymmetric at (" << i << ", " << j << ")";
        invalid(os.str());
      }
      if (std::abs(m(i, j)) > 1.0) {
        std::ostringstream os;
        os << "off-diagonal (" << i << ", " << j << ") = " << m(i, j) << " outside [-1, 1]";
        invalid(os.str());
      }
    }
  }
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  sym.diagonal().setOnes();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) invalid("eigendecomposition failed");
  if (es.eigenvalues().minCoeff() < -1e-10) {
    std::ostringstream os;
    os << "negative eigenvalue " << es.eigenvalues().minCoeff();
    invalid(os.str());
  }
  return CorrelationMatrix(std::move(sym));
}

CorrelationMatrix identity_correlation(std::size_t n) {
  return validate_correlation(Eigen::MatrixXd::Identity(n, n));
}

CorrelationMatrix pair_correlation(double theta) {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, theta, theta, 1.0;
  return validate_correlation(m);
}

CorrelationMatrix leading_submatrix(const CorrelationMatrix& r, std::size_t n) {
  if (n == 0 || n > r.dim()) throw std::invalid_argument("leading_submatrix: bad size");
  return validate_correlation(r.matrix().topLeftCorner(n, n));
}

CorrelationMatrix nearest_correlation_spectral(const Eigen::MatrixXd& c) {
  const auto n = c.rows();
  if (n == 0 || c.cols() != n) invalid("candidate not square");
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-10) invalid("candidate not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (c + c.transpose()));
  if (es.info() != Eigen::Success) throw std::runtime_error("spectral repair: eigensolver failed");
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd b = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  const Eigen::VectorXd d = b.diagonal().cwiseSqrt().cwiseInverse();
  if (!d.allFinite()) throw std::runtime_error("spectral repair: zero diagonal after clipping");
  b = d.asDiagonal() * b * d.asDiagonal();
  b = 0.5 * (b + b.transpose());
  b.diagonal().setOnes();
  return validate_correlation(b);
}

CorrelationMatrix random_correlation_gram(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("random_correlation_gram: n must be positive");
  RngStream rng(seed);
  Eigen::MatrixXd u(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) u(i, k) = rng.normal();
    u.col(k).normalize();
  }
  Eigen::MatrixXd r = u.transpose() * u;
  r = 0.5 * (r + r.transpose());
  r.diagonal().setOnes();
  return validate_correlation(r);
}

FactorizedCorrelation factorize(const CorrelationMatrix& r) {
  FactorizedCorrelation f;
  Eigen::LLT<Eigen::MatrixXd> llt(r.matrix());
  if (llt.info() == Eigen::Success) {
    f.factor = llt.matrixL();
    f.triangular = true;
    return f;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.matrix());
  f.factor = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  f.triangular = false;
  return f;
}

void mvn_sample(const FactorizedCorrelation& fac, RngStream& rng, std::span<double> out,
                std::span<double> g) {
  const std::size_t n = fac.dim();
  for (std::size_t i = 0; i < n; ++i) g[i] = rng.normal();
  const Eigen::MatrixXd& l = fac.factor;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t jmax = fac.triangular ? i + 1 : n;
    double acc = 0.0;
    for (std::size_t j = 0; j < jmax; ++j) acc += l(i, j) * g[j];
    out[i] = acc;
  }
}

std::vector<double> mvn_sample(const FactorizedCorrelation& fac, RngStream& rng) {
  std::vector<double> out(fac.dim()), g(fac.dim());
  mvn_sample(fac, rng, out, g);
  return out;
}

double gaussian_copula_cdf(const CorrelationMatrix& r, std::span<const double> u,
                           std::size_t mc_samples, RngStream& rng) {
  const std::size_t n = r.dim();
  if (u.size() != n) throw std::invalid_argument("gaussian_copula_cdf: dimension mismatch");
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(u[k] > 0.0 && u[k] <= 1.0))
      throw std::domain_error("gaussian_copula_cdf: u outside (0, 1]");
    w[k] = u[k] >= 1.0 ? INFINITY : normal_inv(u[k]);
  }
  const auto fac = factorize(r);
  std::vector<double> z(n), g(n);
  std::size_t hits = 0;
  for (std::size_t m = 0; m < mc_samples; ++m) {
    mvn_sample(fac, rng, z, g);
    bool in = true;
    for (std::size_t k = 0; k < n && in; ++k) in = z[k] <= w[k];
    hits += in;
  }
  return double(hits) / double(mc_samples);
}

Eigen::MatrixXd parse_matrix_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw DataError("matrix CSV: cannot parse '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  const std::size_t n = rows.size();
  if (n == 0) throw DataError("matrix CSV: empty");
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) throw DataError("matrix CSV: row " + std::to_string(i + 1) + " has wrong length");
    for (std::size_t j = 0; j < n; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_matrix_csv(ss.str());
}

std::string format_matrix_csv(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << m(i, j);
    os << '\n';
  }
  return os.str();
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path);
  f << format_matrix_csv(m);
}

}  // namespace bcm
