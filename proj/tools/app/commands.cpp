#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bcm/errors.hpp"
#include "bcm/io.hpp"
#include "bcm/sampler.hpp"

namespace bcm::app {

using nlohmann::json;

namespace {

json block(const RunConfig& c, const char* name) {
  return c.raw.contains(name) ? c.raw[name] : json::object();
}

void need_cases(const RunConfig& c) {
  if (c.cases.empty()) throw ConfigError("config has no 'correlation' block");
}

Payoff named_payoff(const std::string& name, double strike) {
  if (name == "max_put") return max_put(strike);
  if (name == "max_call") return max_call(strike);
  if (name == "geometric_call") return geometric_call(strike);
  throw ConfigError("unknown payoff '" + name + "' (max_put, max_call, geometric_call)");
}

LikelihoodMethod parse_method(const std::string& m) {
  if (m == "sequential") return LikelihoodMethod::Sequential;
  if (m == "bridge") return LikelihoodMethod::Bridge;
  throw ConfigError("method must be 'sequential' or 'bridge'");
}

FitVector fit_vector(const json& j, const char* what) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 4) throw ConfigError(std::string(what) + " needs four values (rho, upsilon, c, kappa)");
  return {v[0], v[1], v[2], v[3]};
}

ParamBounds parse_bounds(const json& cal) {
  ParamBounds b;
  if (cal.contains("bounds")) {
    b.lower = fit_vector(cal["bounds"].at("lower"), "bounds.lower");
    b.upper = fit_vector(cal["bounds"].at("upper"), "bounds.upper");
  }
  return b;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string o = "\"";
  for (char ch : s) o += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return o + "\"";
}

}  // namespace

void apply(RunConfig& c, const Overrides& o) {
  if (o.seed) c.seed = *o.seed;
  if (o.workers) c.workers = *o.workers;
  if (o.scenarios) {
    if (*o.scenarios < 2) throw ConfigError("--scenarios must be >= 2");
    c.scenarios = *o.scenarios;
    if (c.raw.contains("bermudan")) c.raw["bermudan"]["paths"] = *o.scenarios;
  }
}

std::string rows_csv_header() { return "instrument,case,strike,price,std_error,scenarios,seed,workers,wall_time\n"; }

std::string rows_csv(const std::vector<ResultRow>& rows, bool header) {
  std::ostringstream o;
  if (header) o << rows_csv_header();
  for (const auto& r : rows) {
    o.precision(10);
    o << r.instrument << ',' << csv_escape(r.label) << ',' << r.strike << ',' << r.estimate.price << ','
      << r.estimate.std_error << ',' << r.estimate.scenarios << ',' << r.seed << ',' << r.workers << ',';
    o.precision(4);
    o << r.estimate.wall_time << '\n';
  }
  return o.str();
}

json rows_json(const std::vector<ResultRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    json p = r.parameters;
    p["case"] = r.label;
    p["strike"] = r.strike;
    p["workers"] = r.workers;
    out.push_back({{"instrument", r.instrument},
                   {"parameters", p},
                   {"price", r.estimate.price},
                   {"std_error", r.estimate.std_error},
                   {"scenarios", r.estimate.scenarios},
                   {"seed", r.seed},
                   {"wall_time", r.estimate.wall_time}});
  }
  return out;
}

void write_rows(const std::string& path, const std::vector<ResultRow>& rows) {
  if (std::filesystem::path(path).extension() == ".json") {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << rows_json(rows).dump(2) << '\n';
    return;
  }
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw DataError("cannot write " + path);
  out << rows_csv(rows, fresh);
}

namespace {

json model_parameters(const MultiAssetModel& m, const RunConfig& c) {
  json assets = json::array();
  for (std::size_t k = 0; k < m.assets(); ++k) {
    json a = params_json(m.models[k]);
    a["spot"] = m.spots[k];
    assets.push_back(a);
  }
  return json{{"assets", assets}, {"steps", c.steps}, {"maturity", c.maturity}};
}

}  // namespace

std::vector<ResultRow> cmd_price_asian(const RunConfig& c) {
  need_cases(c);
  const json a = block(c, "asian");
  const auto strikes = a.value("strikes", std::vector<double>{100.0});
  const TimeGrid grid = TimeGrid::uniform(c.maturity, c.steps);
  std::vector<ResultRow> rows;
  for (const auto& cs : c.cases) {
    const auto m = c.model(cs);
    const auto est = price_asian_basket(m, strikes, grid, c.scenarios, c.workers, c.seed);
    for (std::size_t i = 0; i < strikes.size(); ++i)
      rows.push_back({"asian_basket_call", cs.label, strikes[i], model_parameters(m, c), est[i], c.seed, c.workers});
  }
  return rows;
}

std::vector<ResultRow> cmd_price_european(const RunConfig& c) {
  need_cases(c);
  const json e = block(c, "european");
  const std::string payoff = e.value("payoff", std::string("max_put"));
  const auto strikes = e.value("strikes", std::vector<double>{100.0});
  const double maturity = e.value("maturity", c.maturity);
  std::vector<ResultRow> rows;
  for (const auto& cs : c.cases) {
    const auto m = c.model(cs);
    for (double k : strikes) {
      const auto est = price_european_mc(m, named_payoff(payoff, k), maturity, c.scenarios, c.workers, c.seed);
      json p = model_parameters(m, c);
      p["maturity"] = maturity;
      p["payoff"] = payoff;
      rows.push_back({"european_" + payoff, cs.label, k, p, est, c.seed, c.workers});
    }
  }
  return rows;
}

std::vector<ResultRow> cmd_price_bermudan(const RunConfig& c) {
  need_cases(c);
  const json b = block(c, "bermudan");
  const std::string payoff = b.value("payoff", std::string("max_put"));
  const double strike = b.value("strike", 100.0);
  const std::size_t dates = b.value("exercise_dates", std::size_t(10));
  const double maturity = b.value("maturity", c.maturity);
  const std::string basis = b.value("basis", std::string("power+payoff"));
  const std::size_t reps = b.value("replications", std::size_t(1));
  if (dates == 0) throw ConfigError("bermudan.exercise_dates must be >= 1");
  if (basis != "power" && basis != "power+payoff") throw ConfigError("bermudan.basis must be 'power' or 'power+payoff'");

  std::vector<ResultRow> rows;
  for (const auto& cs : c.cases) {
    const auto m = c.model(cs);
    const Payoff pay = named_payoff(payoff, strike);
    BermudanSpec spec;
    spec.payoff = [pay](double, std::span<const double> s) { return pay(s); };
    spec.exercise_times = TimeGrid::uniform(maturity, dates);
    spec.basis = power_basis(m.assets(), basis == "power+payoff" ? &pay : nullptr);
    spec.regression_paths = b.value("paths", c.scenarios);
    spec.discount_first_step = b.value("discount_first_step", true);
    const auto est = price_bermudan_regression(m, spec, c.workers, c.seed, reps);
    json p = model_parameters(m, c);
    p["maturity"] = maturity;
    p["payoff"] = payoff;
    p["exercise_dates"] = dates;
    p["basis"] = basis;
    p["replications"] = reps;
    rows.push_back({"bermudan_" + payoff, cs.label, strike, p, est, c.seed, c.workers});
  }
  return rows;
}

std::string cmd_simulate(const RunConfig& c) {
  need_cases(c);
  const json s = block(c, "simulate");
  const std::string method = s.value("method", std::string("bridge"));
  const std::string space = s.value("space", std::string("S"));
  if (space != "S" && space != "X") throw ConfigError("simulate.space must be 'S' or 'X'");
  const Space sp = space == "S" ? Space::S : Space::X;
  const auto m = c.model(c.cases.front());
  const auto x0 = m.x0();
  const auto fac = factorize(m.corr);
  const TimeGrid grid = TimeGrid::uniform(c.maturity, c.steps);
  PathBlock paths;
  if (method == "bridge") {
    std::vector<TabulatedInverseCdf> tables;
    for (std::size_t k = 0; k < m.assets(); ++k)
      tables.push_back(build_terminal_inverse_cdf(m.models[k], x0[k], grid.maturity()));
    paths = sample_path_bridge(m.models, x0, fac, tables, grid, c.scenarios, c.workers, RngStream(c.seed), sp);
  } else if (method == "sequential") {
    paths = sample_path_sequential(m.models, x0, fac, grid, c.scenarios, c.workers, RngStream(c.seed), sp);
  } else {
    throw ConfigError("simulate.method must be 'bridge' or 'sequential'");
  }
  std::ostringstream out;
  write_path_csv(out, paths, grid);
  return out.str();
}

json calibration_json(const CalibrationResult& r) {
  json j{{"params", params_json(r.params)},
         {"bounds", {{"lower", r.bounds.lower}, {"upper", r.bounds.upper}}},
         {"objective", r.objective},
         {"iterations", r.iterations},
         {"evaluations", r.evaluations},
         {"converged", r.converged},
         {"method", r.method}};
  j["alpha"] = r.alpha ? json(*r.alpha) : json(nullptr);
  return j;
}

json cmd_calibrate_single(const RunConfig& c, const std::string& quotes_path, const std::string& history_path) {
  if (quotes_path.empty() == history_path.empty()) throw ConfigError("give exactly one of --quotes or --history");
  const json cal = block(c, "calibration");
  const ParamBounds bounds = parse_bounds(cal);
  const FitVector init = cal.contains("init") ? fit_vector(cal["init"], "init") : kDefaultInit;

  if (!history_path.empty()) {
    const auto h = read_history_csv(history_path);
    std::size_t k = 0;
    if (cal.contains("asset")) {
      const json& a = cal["asset"];
      if (a.is_number_unsigned()) {
        k = a.get<std::size_t>();
      } else {
        const auto it = std::find(h.names.begin(), h.names.end(), a.get<std::string>());
        if (it == h.names.end()) throw ConfigError("calibration.asset not found in the history header");
        k = std::size_t(it - h.names.begin());
      }
    }
    if (k >= h.series.assets()) throw ConfigError("calibration.asset out of range");
    MleFitOptions o;
    o.bounds = bounds;
    o.init = init;
    o.method = parse_method(cal.value("method", std::string("sequential")));
    auto r = fit_single_mle(h.series.asset(k), c.rate, o);
    json j = calibration_json(r);
    j["asset"] = h.names[k];
    j["observations"] = h.series.size();
    return j;
  }

  const auto quotes = read_quotes_csv(quotes_path);
  if (!cal.contains("spot")) throw ConfigError("calibration.spot is required for option quotes");
  const double spot = cal["spot"].get<double>();
  const std::string scheme = cal.value("weights", std::string("vega"));
  if (scheme != "vega" && scheme != "spread") throw ConfigError("calibration.weights must be 'vega' or 'spread'");
  const auto w = make_weights(quotes, scheme == "vega" ? WeightScheme::Vega : WeightScheme::Spread, spot, c.rate);

  LseFitOptions o;
  o.bounds = bounds;
  o.init = init;
  if (cal.contains("anchor")) o.anchor = parse_params(cal["anchor"], c.rate);
  std::optional<double> primal_f;
  if (cal.contains("alpha")) {
    const json& a = cal["alpha"];
    if (a.is_number()) {
      o.alpha = a.get<double>();
    } else if (a == "morozov") {
      if (!o.anchor) throw ConfigError("alpha = morozov needs an 'anchor' parameter block");
      const double delta = cal.value("delta", 1.2);
      UouParams xi0 = *o.anchor;
      if (cal.contains("primal")) {
        xi0 = parse_params(cal["primal"], c.rate);
      } else {
        // low-precision unregularised fit
        LseFitOptions lo = o;
        lo.alpha = 0.0;
        lo.optimizer.f_tol = 1e-3;
        lo.optimizer.max_evaluations = 400;
        lo.optimizer.restarts = 0;
        xi0 = fit_single_lse(quotes, w, spot, c.rate, lo).params;
      }
      o.alpha = morozov_alpha(xi0, *o.anchor, quotes, w, spot, delta);
      primal_f = lse_objective(xi0, quotes, w, spot);
    } else {
      throw ConfigError("calibration.alpha must be a number or \"morozov\"");
    }
  }
  auto r = fit_single_lse(quotes, w, spot, c.rate, o);
  json j = calibration_json(r);
  j["weights"] = scheme;
  j["quotes"] = quotes.size();
  if (primal_f) j["primal_objective"] = *primal_f;
  return j;
}

Eigen::MatrixXd cmd_calibrate_corr(const RunConfig& c, const std::string& history_path, json* details) {
  const auto h = read_history_csv(history_path);
  const json cal = block(c, "calibration");
  const LikelihoodMethod method = parse_method(cal.value("method", std::string("bridge")));
  const std::string mode = cal.value("mode", std::string("pairwise"));
  if (mode != "pairwise" && mode != "full") throw ConfigError("calibration.mode must be 'pairwise' or 'full'");
  const std::size_t n = h.series.assets();
  if (n < 2) throw DataError("calibrate-corr: history needs at least two assets");

  std::vector<UouParams> fitted;
  if (!c.assets.empty()) {
    if (c.assets.size() != n)
      throw ConfigError("config lists " + std::to_string(c.assets.size()) + " assets, history has " + std::to_string(n));
    for (const auto& a : c.assets) fitted.push_back(a.params);
  } else {
    MleFitOptions o;
    o.method = method;
    o.bounds = parse_bounds(cal);
    for (std::size_t k = 0; k < n; ++k) fitted.push_back(fit_single_mle(h.series.asset(k), c.rate, o).params);
  }
  const auto scores = copula_scores(fitted, h.series, method);
  CorrFitResult r = fit_corr_pairwise(scores.w, c.workers);
  if (mode == "full") r = fit_corr_full(scores.w, r.matrix);
  if (details) {
    auto rows = [](const Eigen::MatrixXd& m) {
      json a = json::array();
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        a.push_back(row);
      }
      return a;
    };
    json fj = json::array();
    for (const auto& p : fitted) fj.push_back(params_json(p));
    *details = json{{"assets", h.names},
                    {"fitted", fj},
                    {"mode", mode},
                    {"method", method == LikelihoodMethod::Bridge ? "bridge" : "sequential"},
                    {"candidate", rows(r.candidate)},
                    {"matrix", rows(r.matrix.matrix())},
                    {"loglik", r.loglik},
                    {"cdf_evaluations", scores.cdf_evaluations},
                    {"clipped_scores", scores.clipped}};
  }
  return r.matrix.matrix();
}

std::string cmd_smile(const RunConfig& c) {
  if (c.assets.empty() && !c.asset_template) throw ConfigError("smile needs an asset parameter block");
  const AssetSpec& a = c.assets.empty() ? *c.asset_template : c.assets.front();
  const json s = block(c, "smile");
  const auto strikes = s.value("strikes", std::vector<double>{80, 90, 100, 110, 120});
  const auto maturities = s.value("maturities", std::vector<double>{0.25, 0.5, 1.0});
  std::vector<OptionQuote> q;
  for (double t : maturities)
    for (double k : strikes) q.push_back({k, t, 0.0, std::nullopt, std::nullopt});
  const auto prices = model_prices(a.params, q, a.spot);
  std::ostringstream out;
  out.precision(10);
  out << "strike,maturity,price,implied_vol\n";
  for (std::size_t i = 0; i < q.size(); ++i) {
    out << q[i].strike << ',' << q[i].maturity << ',' << prices[i] << ',';
    try {
      out << bs_implied_vol(prices[i], a.spot, q[i].strike, c.rate, q[i].maturity);
    } catch (const std::domain_error&) {
      out << "nan";
    }
    out << '\n';
  }
  return out.str();
}

Eigen::MatrixXd cmd_gen_corr(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ConfigError("gen-corr: n must be >= 1");
  return random_correlation_gram(n, seed).matrix();
}

Eigen::MatrixXd cmd_repair_corr(const std::string& matrix_csv_path) {
  const Eigen::MatrixXd m = read_matrix_csv(matrix_csv_path);
  return nearest_correlation_spectral(m).matrix();
}

}  // namespace bcm::app
