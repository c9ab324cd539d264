#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bcm/corrmat.hpp"
#include "bcm/sampler.hpp"
#include "bcm/uou.hpp"

namespace bcm {

struct McEstimate {
  double price = 0.0;
  double std_error = 0.0;
  std::size_t scenarios = 0;
  double wall_time = 0.0;  // seconds
  std::uint64_t clamps = 0;
};

// n UOU marginals coupled by a Gaussian copula. All marginals share one rate.
struct MultiAssetModel {
  std::vector<UouParams> models;
  CorrelationMatrix corr;
  std::vector<double> spots;

  std::size_t assets() const { return models.size(); }
  double rate() const { return models.front().rate(); }
  // Throws std::invalid_argument on inconsistent sizes or rates.
  void validate() const;
  std::vector<double> x0() const;
};

// Running mean / M2 with Chan's pairwise merge, so per-block results can be
// combined in a fixed order.
struct MomentAccumulator {
  std::size_t n = 0;
  double mean = 0.0, m2 = 0.0;

  void add(double v) {
    ++n;
    const double d = v - mean;
    mean += d / double(n);
    m2 += d * (v - mean);
  }
  void merge(const MomentAccumulator& o);
  double variance() const { return n > 1 ? m2 / double(n - 1) : 0.0; }
  double std_error() const { return n > 0 ? std::sqrt(variance() / double(n)) : 0.0; }
};

using Payoff = std::function<double(std::span<const double>)>;
using ExercisePayoff = std::function<double(double, std::span<const double>)>;

Payoff max_call(double strike);
Payoff max_put(double strike);
Payoff geometric_call(double strike);

// Arithmetic Asian basket call (max_k A_k - K)^+ with A_k the average of
// asset k over t_1..t_N (S_0 excluded). One estimate per strike, all from
// the same paths.
std::vector<McEstimate> price_asian_basket(const MultiAssetModel& m, std::span<const double> strikes,
                                           const TimeGrid& grid, std::size_t scenarios, std::size_t workers,
                                           std::uint64_t seed);
McEstimate price_asian_basket(const MultiAssetModel& m, double strike, const TimeGrid& grid,
                              std::size_t scenarios, std::size_t workers, std::uint64_t seed);

McEstimate price_european_mc(const MultiAssetModel& m, const Payoff& payoff, double maturity,
                             std::size_t scenarios, std::size_t workers, std::uint64_t seed);

struct BermudanSpec {
  ExercisePayoff payoff;
  // Exercise dates t_1..t_N; t_0 = 0 is the valuation date.
  TimeGrid exercise_times = TimeGrid::uniform(1.0, 1);
  // psi_q; the constant function must come first.
  std::vector<Payoff> basis;
  std::size_t regression_paths = 100000;
  // Discount the averaged t_1 values back to t_0.
  bool discount_first_step = true;
};

// Basis {1, S_k, S_k^2, S_i S_j (i<j)} plus, optionally, the payoff itself.
std::vector<Payoff> power_basis(std::size_t assets, const Payoff* payoff = nullptr);

// Regression estimator over all paths, in sample. With several replications
// the standard error is the spread across replications; with one it falls
// back to the per-path spread of the t_1 values.
McEstimate price_bermudan_regression(const MultiAssetModel& m, const BermudanSpec& spec, std::size_t workers,
                                     std::uint64_t seed, std::size_t replications = 1);

}  // namespace bcm
