#include "bcm/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace bcm {

namespace {

struct Scaled {
  const std::function<double(const std::vector<double>&)>& f;
  const std::vector<double>& lo;
  const std::vector<double>& hi;
  std::size_t evals = 0;
  std::vector<double> buf;

  double operator()(const std::vector<double>& u) {
    buf.resize(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) buf[i] = lo[i] + (hi[i] - lo[i]) * u[i];
    ++evals;
    const double v = f(buf);
    // failed evaluations are treated as infinitely bad rather than aborting the search
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  }
};

void clamp01(std::vector<double>& u) {
  for (double& v : u) v = std::clamp(v, 0.0, 1.0);
}

struct Pass {
  std::vector<double> u;
  double value;
  std::size_t iterations;
  bool converged;
};

Pass nelder_mead(Scaled& f, std::vector<double> start, const NelderMeadOptions& o, std::size_t budget) {
  const std::size_t d = start.size();
  std::vector<std::vector<double>> s(d + 1, start);
  std::vector<double> fv(d + 1);
  for (std::size_t i = 0; i < d; ++i) {
    // step inward if the start sits on the upper face
    s[i + 1][i] += s[i + 1][i] + o.initial_step <= 1.0 ? o.initial_step : -o.initial_step;
  }
  for (std::size_t i = 0; i <= d; ++i) fv[i] = f(s[i]);

  std::vector<std::size_t> idx(d + 1);
  std::vector<double> centroid(d), xr(d), xe(d), xc(d);
  const std::size_t stop_at = f.evals + budget;
  std::size_t it = 0;
  bool converged = false;
  while (f.evals < stop_at) {
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = idx.front(), worst = idx.back(), second = idx[d - 1];

    const double fspread = fv[worst] - fv[best];
    double xspread = 0.0;
    for (std::size_t i = 0; i <= d; ++i)
      for (std::size_t k = 0; k < d; ++k) xspread = std::max(xspread, std::abs(s[i][k] - s[best][k]));
    if ((std::isfinite(fspread) && fspread <= o.f_tol * std::max(std::abs(fv[best]), o.f_floor)) ||
        xspread <= o.x_tol) {
      converged = true;
      break;
    }
    ++it;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= d; ++i)
      if (i != worst)
        for (std::size_t k = 0; k < d; ++k) centroid[k] += s[i][k] / double(d);

    for (std::size_t k = 0; k < d; ++k) xr[k] = centroid[k] + (centroid[k] - s[worst][k]);
    clamp01(xr);
    const double fr = f(xr);
    if (fr < fv[best]) {
      for (std::size_t k = 0; k < d; ++k) xe[k] = centroid[k] + 2.0 * (centroid[k] - s[worst][k]);
      clamp01(xe);
      const double fe = f(xe);
      if (fe < fr) { s[worst] = xe; fv[worst] = fe; }
      else { s[worst] = xr; fv[worst] = fr; }
      continue;
    }
    if (fr < fv[second]) {
      s[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    for (std::size_t k = 0; k < d; ++k)
      xc[k] = outside ? centroid[k] + 0.5 * (xr[k] - centroid[k]) : centroid[k] + 0.5 * (s[worst][k] - centroid[k]);
    const double fc = f(xc);
    if (fc < (outside ? fr : fv[worst])) {
      s[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= d; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < d; ++k) s[i][k] = s[best][k] + 0.5 * (s[i][k] - s[best][k]);
      fv[i] = f(s[i]);
    }
  }
  const std::size_t b = std::size_t(std::min_element(fv.begin(), fv.end()) - fv.begin());
  return {s[b], fv[b], it, converged};
}

}  // namespace

OptimizeResult minimize_bounded(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> x0, const std::vector<double>& lo,
                                const std::vector<double>& hi, const NelderMeadOptions& opts) {
  const std::size_t d = x0.size();
  if (d == 0 || lo.size() != d || hi.size() != d) throw std::invalid_argument("minimize_bounded: dimension mismatch");
  for (std::size_t i = 0; i < d; ++i)
    if (!(hi[i] > lo[i])) throw std::invalid_argument("minimize_bounded: empty box");

  Scaled sf{f, lo, hi, 0, {}};
  std::vector<double> u(d);
  for (std::size_t i = 0; i < d; ++i) u[i] = std::clamp((x0[i] - lo[i]) / (hi[i] - lo[i]), 0.0, 1.0);

  Pass best = nelder_mead(sf, u, opts, opts.max_evaluations);
  std::size_t iterations = best.iterations;
  for (std::size_t r = 0; r < opts.restarts && sf.evals < opts.max_evaluations; ++r) {
    Pass next = nelder_mead(sf, best.u, opts, opts.max_evaluations - sf.evals);
    iterations += next.iterations;
    const bool improved = next.value < best.value - opts.f_tol * std::max(std::abs(best.value), opts.f_floor);
    if (next.value <= best.value) best = next;
    if (!improved) break;
  }

  OptimizeResult out;
  out.x.resize(d);
  for (std::size_t i = 0; i < d; ++i) out.x[i] = lo[i] + (hi[i] - lo[i]) * best.u[i];
  out.value = best.value;
  out.iterations = iterations;
  out.evaluations = sf.evals;
  out.converged = best.converged;
  return out;
}

}  // namespace bcm
