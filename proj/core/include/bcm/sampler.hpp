#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcm/corrmat.hpp"
#include "bcm/parallel.hpp"
#include "bcm/rng.hpp"
#include "bcm/uou.hpp"
#include "bcm/uou_table.hpp"

namespace bcm {

class TimeGrid {
 public:
  // Points must start at 0 and increase strictly, with at least one step.
  explicit TimeGrid(std::vector<double> points);
  static TimeGrid uniform(double maturity, std::size_t steps);

  const std::vector<double>& points() const { return t_; }
  double operator[](std::size_t j) const { return t_[j]; }
  std::size_t steps() const { return t_.size() - 1; }
  double maturity() const { return t_.back(); }

 private:
  std::vector<double> t_;
};

// Quantile function of a one-dimensional law, tabulated against the normal
// score w = N^{-1}(u) on a uniform w-grid. Sampling with a standard normal Z
// then needs no N / N^{-1} round trip: x = from_score(Z).
class TabulatedInverseCdf {
 public:
  TabulatedInverseCdf(double w_lo, double w_hi, std::vector<double> x, std::vector<double> dxdw);

  double from_score(double w) const { return table_(std::clamp(w, w_lo_, w_hi_)); }
  bool in_range(double w) const { return w >= w_lo_ && w <= w_hi_; }
  // u is clamped into [u_min, u_max].
  double inverse(double u) const;

  double u_min() const;
  double u_max() const;
  double w_min() const { return w_lo_; }
  double w_max() const { return w_hi_; }
  std::vector<double> levels() const;
  const std::vector<double>& values() const { return table_.nodes(); }

 private:
  double w_lo_, w_hi_;
  HermiteTable table_;
};

// Generic builder: tabulates the quantile function of the density exp(log_density)
// restricted to [x_lo, x_hi], between tail and 1 - tail.
TabulatedInverseCdf build_inverse_cdf(const std::function<double(double)>& log_density, double x_lo,
                                      double x_hi, std::size_t grid_size = 1024,
                                      double tail = 1e-7);

// Terminal-law table for X_T given X_0 = x0.
TabulatedInverseCdf build_terminal_inverse_cdf(const UouParams& p, double x0, double maturity,
                                               std::size_t grid_size = 1024);

// Phi(x) = P(X_t <= x | X_0 = x0) by adaptive quadrature; the upper tail
// variant returns 1 - Phi(x) without cancellation.
double transition_cdf(const UouParams& p, double t, double x0, double x);
double transition_sf(const UouParams& p, double t, double x0, double x);
// Inverse of the above at the normal score z, i.e. Phi^{-1}(N(z)). log_u may
// replace the exact ln u_hat (e.g. a UouMapTable).
double transition_quantile(const UouParams& p, double t, double x0, double z,
                           const std::function<double(double)>& log_u = {});

enum class Space { X, S };

// Paths for n_scenarios scenarios on n_times grid points (t_0 included).
struct PathBlock {
  std::size_t n_assets = 0, n_times = 0, n_scenarios = 0;
  Space space = Space::S;
  std::vector<double> values;  // scenario-major, then asset, then time
  std::uint64_t clamps = 0;

  PathBlock() = default;
  PathBlock(std::size_t assets, std::size_t times, std::size_t scenarios, Space sp)
      : n_assets(assets), n_times(times), n_scenarios(scenarios), space(sp),
        values(assets * times * scenarios) {}
  double& at(std::size_t asset, std::size_t time, std::size_t scenario) {
    return values[(scenario * n_assets + asset) * n_times + time];
  }
  double at(std::size_t asset, std::size_t time, std::size_t scenario) const {
    return values[(scenario * n_assets + asset) * n_times + time];
  }
  std::span<double> scenario(std::size_t m) {
    return {values.data() + m * n_assets * n_times, n_assets * n_times};
  }
};

// CSV rows: scenario,time,asset,value
void write_path_csv(std::ostream& out, const PathBlock& block, const TimeGrid& grid);

struct SamplerOptions {
  std::size_t table_size = 1024;
  std::size_t map_nodes = 4096;
  // Fraction of terminal draws allowed outside the quantile table.
  double max_clamp_rate = 1e-4;
};

// Backward-in-time bridge sampler. Everything per-model is precomputed at
// construction; draw() fills one scenario and is safe to call concurrently
// with separate RNG streams and workspaces.
class BridgeSampler {
 public:
  BridgeSampler(std::vector<UouParams> models, std::vector<double> x0s, FactorizedCorrelation fac,
                TimeGrid grid, SamplerOptions opts = {});
  BridgeSampler(std::vector<UouParams> models, std::vector<double> x0s, FactorizedCorrelation fac,
                std::vector<TabulatedInverseCdf> tables, TimeGrid grid, SamplerOptions opts = {});

  std::size_t assets() const { return models_.size(); }
  const TimeGrid& grid() const { return grid_; }
  const std::vector<UouParams>& models() const { return models_; }
  const SamplerOptions& options() const { return opts_; }

  struct Workspace {
    std::vector<double> z, g, x;
  };
  Workspace workspace() const;

  // Writes X or S values into out[k * n_times + j] (j = 0 holds the start
  // value) and returns the number of clamped terminal scores.
  std::uint32_t draw(RngStream& rng, Workspace& ws, std::span<double> out, Space space = Space::S) const;

 private:
  void prepare();

  std::vector<UouParams> models_;
  std::vector<double> x0_;
  FactorizedCorrelation fac_;
  std::vector<TabulatedInverseCdf> tables_;
  TimeGrid grid_;
  SamplerOptions opts_;
  std::vector<UouMapTable> maps_;
  // Per asset and bridge step j = 1..N-1: X_j = a x0 + b X_{j+1} + sd Z.
  std::vector<double> ca_, cb_, sd_;
};

// Forward sampler: per-step conditional CDF inversion by quadrature. Exact
// but expensive; meant for small grids and cross-checks.
class SequentialSampler {
 public:
  SequentialSampler(std::vector<UouParams> models, std::vector<double> x0s, FactorizedCorrelation fac,
                    TimeGrid grid, SamplerOptions opts = {});

  std::size_t assets() const { return models_.size(); }
  const TimeGrid& grid() const { return grid_; }
  const SamplerOptions& options() const { return opts_; }

  struct Workspace {
    std::vector<double> z, g;
  };
  Workspace workspace() const;
  std::uint32_t draw(RngStream& rng, Workspace& ws, std::span<double> out, Space space = Space::S) const;

 private:
  std::vector<UouParams> models_;
  std::vector<double> x0_;
  FactorizedCorrelation fac_;
  TimeGrid grid_;
  SamplerOptions opts_;
  std::vector<UouMapTable> maps_;
};

// Runs a sampler over n scenarios in fixed blocks. For block b a fresh
// accumulator is created with make_acc(), and visit(acc, path) is called for
// every scenario with the path laid out as in draw(). Accumulators are
// returned in block order, so any reduction over them is deterministic.
template <class Sampler, class MakeAcc, class Visit>
auto simulate_blocks(const Sampler& sampler, std::size_t n, std::size_t workers, const RngStream& root,
                     MakeAcc&& make_acc, Visit&& visit, Space space = Space::S) {
  using Acc = decltype(make_acc());
  const std::size_t nb = block_count(n, kScenarioBlock);
  std::vector<Acc> accs(nb);
  std::vector<std::uint64_t> clamps(nb, 0);
  const std::size_t width = sampler.assets() * (sampler.grid().steps() + 1);
  for_each_block(n, kScenarioBlock, workers, [&](std::size_t b, std::size_t begin, std::size_t end) {
    RngStream rng = root.split(b);
    auto ws = sampler.workspace();
    std::vector<double> path(width);
    Acc acc = make_acc();
    for (std::size_t m = begin; m < end; ++m) {
      clamps[b] += sampler.draw(rng, ws, path, space);
      visit(acc, std::span<const double>(path), m);
    }
    accs[b] = std::move(acc);
  });
  std::uint64_t total = 0;
  for (auto c : clamps) total += c;
  if (double(total) > sampler.options().max_clamp_rate * double(n) * double(sampler.assets()))
    throw std::runtime_error("sampler: " + std::to_string(total) +
                             " terminal draws clamped to the quantile table range");
  return std::make_pair(std::move(accs), total);
}

std::vector<double> sample_terminal(const std::vector<UouParams>& models, const std::vector<double>& x0s,
                                    const FactorizedCorrelation& fac,
                                    const std::vector<TabulatedInverseCdf>& tables, RngStream& rng,
                                    std::uint64_t* clamps = nullptr);

PathBlock sample_path_bridge(const std::vector<UouParams>& models, const std::vector<double>& x0s,
                             const FactorizedCorrelation& fac,
                             const std::vector<TabulatedInverseCdf>& tables, const TimeGrid& grid,
                             std::size_t n_scenarios, std::size_t workers, const RngStream& rng,
                             Space space = Space::S);

PathBlock sample_path_sequential(const std::vector<UouParams>& models, const std::vector<double>& x0s,
                                 const FactorizedCorrelation& fac, const TimeGrid& grid,
                                 std::size_t n_scenarios, std::size_t workers, const RngStream& rng,
                                 Space space = Space::S);

}  // namespace bcm
