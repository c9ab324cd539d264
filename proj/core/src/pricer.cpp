#include "bcm/pricer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "bcm/errors.hpp"

namespace bcm {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<TabulatedInverseCdf> terminal_tables(const MultiAssetModel& m, const std::vector<double>& x0,
                                                 double maturity) {
  std::vector<TabulatedInverseCdf> t;
  for (std::size_t k = 0; k < m.assets(); ++k) t.push_back(build_terminal_inverse_cdf(m.models[k], x0[k], maturity));
  return t;
}

}  // namespace

void MultiAssetModel::validate() const {
  if (models.empty()) throw std::invalid_argument("model: no assets");
  if (spots.size() != models.size() || corr.dim() != models.size())
    throw std::invalid_argument("model: " + std::to_string(models.size()) + " assets but " +
                                std::to_string(spots.size()) + " spots and a " + std::to_string(corr.dim()) +
                                "x" + std::to_string(corr.dim()) + " correlation matrix");
  for (const auto& p : models)
    if (p.rate() != models.front().rate()) throw std::invalid_argument("model: assets must share one rate");
  for (double s : spots)
    if (!(s > 0.0)) throw std::invalid_argument("model: spots must be positive");
}

std::vector<double> MultiAssetModel::x0() const {
  std::vector<double> x(models.size());
  for (std::size_t k = 0; k < models.size(); ++k) x[k] = inverse_map(models[k], spots[k]);
  return x;
}

void MomentAccumulator::merge(const MomentAccumulator& o) {
  if (o.n == 0) return;
  if (n == 0) {
    *this = o;
    return;
  }
  const double na = double(n), nb = double(o.n), nn = na + nb;
  const double d = o.mean - mean;
  mean += d * nb / nn;
  m2 += o.m2 + d * d * na * nb / nn;
  n += o.n;
}

Payoff max_call(double strike) {
  return [strike](std::span<const double> s) {
    return std::max(*std::max_element(s.begin(), s.end()) - strike, 0.0);
  };
}

Payoff max_put(double strike) {
  return [strike](std::span<const double> s) {
    return std::max(strike - *std::max_element(s.begin(), s.end()), 0.0);
  };
}

Payoff geometric_call(double strike) {
  return [strike](std::span<const double> s) {
    double l = 0.0;
    for (double v : s) l += std::log(v);
    return std::max(std::exp(l / double(s.size())) - strike, 0.0);
  };
}

std::vector<McEstimate> price_asian_basket(const MultiAssetModel& m, std::span<const double> strikes,
                                           const TimeGrid& grid, std::size_t scenarios, std::size_t workers,
                                           std::uint64_t seed) {
  m.validate();
  if (strikes.empty() || scenarios < 2) throw std::invalid_argument("price_asian_basket: need strikes and >= 2 scenarios");
  for (double k : strikes)
    if (!(k >= 0.0)) throw std::invalid_argument("price_asian_basket: strikes must be >= 0");
  const auto t0 = std::chrono::steady_clock::now();
  const auto x0 = m.x0();
  BridgeSampler sampler(m.models, x0, factorize(m.corr), terminal_tables(m, x0, grid.maturity()), grid);
  const std::size_t n = m.assets(), N = grid.steps(), nt = N + 1, ns = strikes.size();
  std::vector<double> ks(strikes.begin(), strikes.end());

  auto [accs, clamps] = simulate_blocks(
      sampler, scenarios, workers, RngStream(seed), [ns] { return std::vector<MomentAccumulator>(ns); },
      [&](std::vector<MomentAccumulator>& acc, std::span<const double> path, std::size_t) {
        double amax = -1.0;
        for (std::size_t k = 0; k < n; ++k) {
          double a = 0.0;
          for (std::size_t j = 1; j <= N; ++j) a += path[k * nt + j];
          amax = std::max(amax, a / double(N));
        }
        for (std::size_t i = 0; i < ns; ++i) acc[i].add(std::max(amax - ks[i], 0.0));
      });

  const double df = std::exp(-m.rate() * grid.maturity());
  std::vector<McEstimate> out(ns);
  for (std::size_t i = 0; i < ns; ++i) {
    MomentAccumulator total;
    for (const auto& a : accs) total.merge(a[i]);
    out[i].price = df * total.mean;
    out[i].std_error = df * total.std_error();
    out[i].scenarios = scenarios;
    out[i].clamps = clamps;
  }
  const double wall = seconds_since(t0);
  for (auto& e : out) e.wall_time = wall;
  return out;
}

McEstimate price_asian_basket(const MultiAssetModel& m, double strike, const TimeGrid& grid,
                              std::size_t scenarios, std::size_t workers, std::uint64_t seed) {
  const double k[1] = {strike};
  return price_asian_basket(m, k, grid, scenarios, workers, seed).front();
}

McEstimate price_european_mc(const MultiAssetModel& m, const Payoff& payoff, double maturity,
                             std::size_t scenarios, std::size_t workers, std::uint64_t seed) {
  m.validate();
  if (scenarios < 2) throw std::invalid_argument("price_european_mc: need >= 2 scenarios");
  const auto t0 = std::chrono::steady_clock::now();
  const auto x0 = m.x0();
  const TimeGrid grid = TimeGrid::uniform(maturity, 1);
  BridgeSampler sampler(m.models, x0, factorize(m.corr), terminal_tables(m, x0, maturity), grid);
  const std::size_t n = m.assets();

  // the terminal-state buffer lives in the per-block accumulator: the visitor
  // itself is shared by all workers
  struct Block {
    MomentAccumulator acc;
    std::vector<double> s;
  };
  auto [accs, clamps] = simulate_blocks(
      sampler, scenarios, workers, RngStream(seed), [n] { return Block{{}, std::vector<double>(n)}; },
      [&](Block& b, std::span<const double> path, std::size_t) {
        for (std::size_t k = 0; k < n; ++k) b.s[k] = path[k * 2 + 1];
        b.acc.add(payoff(b.s));
      });
  MomentAccumulator total;
  for (const auto& a : accs) total.merge(a.acc);
  const double df = std::exp(-m.rate() * maturity);
  McEstimate e;
  e.price = df * total.mean;
  e.std_error = df * total.std_error();
  e.scenarios = scenarios;
  e.clamps = clamps;
  e.wall_time = seconds_since(t0);
  return e;
}

std::vector<Payoff> power_basis(std::size_t assets, const Payoff* payoff) {
  std::vector<Payoff> b;
  b.push_back([](std::span<const double>) { return 1.0; });
  for (std::size_t k = 0; k < assets; ++k) b.push_back([k](std::span<const double> s) { return s[k]; });
  for (std::size_t k = 0; k < assets; ++k) b.push_back([k](std::span<const double> s) { return s[k] * s[k]; });
  for (std::size_t i = 0; i < assets; ++i)
    for (std::size_t j = i + 1; j < assets; ++j)
      b.push_back([i, j](std::span<const double> s) { return s[i] * s[j]; });
  if (payoff) b.push_back(*payoff);
  return b;
}

namespace {

// beta = B^{-1} c after symmetric diagonal scaling, with a small ridge when
// the scaled matrix is not numerically positive definite.
Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& b, const Eigen::VectorXd& c) {
  const Eigen::Index l = b.rows();
  Eigen::VectorXd d(l);
  for (Eigen::Index i = 0; i < l; ++i) d(i) = b(i, i) > 0.0 ? 1.0 / std::sqrt(b(i, i)) : 1.0;
  Eigen::MatrixXd a = d.asDiagonal() * b * d.asDiagonal();
  const Eigen::VectorXd rhs = d.cwiseProduct(c);
  for (double ridge : {0.0, 1e-10}) {
    Eigen::MatrixXd ar = a;
    ar.diagonal().array() += ridge;
    Eigen::LLT<Eigen::MatrixXd> llt(ar);
    if (llt.info() != Eigen::Success) continue;
    Eigen::VectorXd y = llt.solve(rhs);
    if (y.allFinite()) return d.cwiseProduct(y);
  }
  throw NonConvergence("bermudan: regression normal equations are singular even with a ridge");
}

struct RegressionSums {
  Eigen::MatrixXd b;
  Eigen::VectorXd c;
};

}  // namespace

McEstimate price_bermudan_regression(const MultiAssetModel& m, const BermudanSpec& spec, std::size_t workers,
                                     std::uint64_t seed, std::size_t replications) {
  m.validate();
  if (!spec.payoff) throw std::invalid_argument("bermudan: no payoff");
  if (spec.basis.empty()) throw std::invalid_argument("bermudan: empty basis");
  if (spec.regression_paths < 2) throw std::invalid_argument("bermudan: need >= 2 paths");
  if (replications == 0) throw std::invalid_argument("bermudan: need >= 1 replication");
  const auto t0 = std::chrono::steady_clock::now();

  const TimeGrid& grid = spec.exercise_times;
  const std::size_t n = m.assets(), N = grid.steps(), nt = N + 1, M = spec.regression_paths;
  const std::size_t L = spec.basis.size();
  const double r = m.rate();
  const auto x0 = m.x0();
  const auto fac = factorize(m.corr);
  const auto tables = terminal_tables(m, x0, grid.maturity());
  const RngStream root(seed);
  const std::size_t nb = block_count(M, kScenarioBlock);

  MomentAccumulator reps, last_paths;
  std::uint64_t clamps = 0;
  for (std::size_t rep = 0; rep < replications; ++rep) {
    const PathBlock paths = sample_path_bridge(m.models, x0, fac, tables, grid, M, workers, root.split(rep));
    clamps += paths.clamps;
    auto state = [&](std::size_t path, std::size_t i, std::vector<double>& s) {
      for (std::size_t k = 0; k < n; ++k) s[k] = paths.values[(path * n + k) * nt + i];
    };
    std::vector<double> v(M);
    {
      std::vector<double> s(n);
      for (std::size_t j = 0; j < M; ++j) {
        state(j, N, s);
        v[j] = spec.payoff(grid[N], s);
      }
    }
    for (std::size_t i = N - 1; i >= 1; --i) {
      const double disc = std::exp(-r * (grid[i + 1] - grid[i]));
      std::vector<RegressionSums> part(nb, {Eigen::MatrixXd::Zero(Eigen::Index(L), Eigen::Index(L)),
                                            Eigen::VectorXd::Zero(Eigen::Index(L))});
      for_each_block(M, kScenarioBlock, workers, [&](std::size_t blk, std::size_t begin, std::size_t end) {
        std::vector<double> s(n);
        Eigen::VectorXd psi(static_cast<Eigen::Index>(L));
        auto& p = part[blk];
        for (std::size_t j = begin; j < end; ++j) {
          state(j, i, s);
          for (std::size_t q = 0; q < L; ++q) psi(Eigen::Index(q)) = spec.basis[q](s);
          p.b.selfadjointView<Eigen::Lower>().rankUpdate(psi);
          p.c += psi * (disc * v[j]);
        }
      });
      Eigen::MatrixXd bsum = Eigen::MatrixXd::Zero(Eigen::Index(L), Eigen::Index(L));
      Eigen::VectorXd csum = Eigen::VectorXd::Zero(Eigen::Index(L));
      for (const auto& p : part) {
        bsum += p.b;
        csum += p.c;
      }
      bsum = bsum.selfadjointView<Eigen::Lower>();
      const Eigen::VectorXd beta = solve_normal_equations(bsum / double(M), csum / double(M));

      for_each_block(M, kScenarioBlock, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<double> s(n);
        for (std::size_t j = begin; j < end; ++j) {
          state(j, i, s);
          double cont = 0.0;
          for (std::size_t q = 0; q < L; ++q) cont += beta(Eigen::Index(q)) * spec.basis[q](s);
          v[j] = std::max(spec.payoff(grid[i], s), cont);
        }
      });
    }
    const double df = spec.discount_first_step ? std::exp(-r * grid[1]) : 1.0;
    MomentAccumulator acc;
    for (double x : v) acc.add(df * x);
    reps.add(acc.mean);
    last_paths = acc;
  }

  McEstimate e;
  e.price = reps.mean;
  e.std_error = replications > 1 ? reps.std_error() : last_paths.std_error();
  e.scenarios = M * replications;
  e.clamps = clamps;
  e.wall_time = seconds_since(t0);
  return e;
}

}  // namespace bcm
