#include "config.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "bcm/errors.hpp"
#include "bcm/io.hpp"

namespace bcm::app {

using nlohmann::json;

namespace {

double get_num(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing key '") + key + "'");
  if (!j[key].is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return j[key].get<double>();
}

std::optional<double> opt_num(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  if (!j[key].is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return j[key].get<double>();
}

void agree(const char* what, double given, double implied) {
  if (std::abs(given - implied) > 1e-12 * std::max(1.0, std::abs(implied)))
    throw ConfigError(std::string("parameter block: ") + what + " = " + std::to_string(given) +
                      " disagrees with the value implied by the other parameters (" + std::to_string(implied) + ")");
}

AssetSpec parse_asset(const json& j, double rate) {
  if (!j.is_object()) throw ConfigError("asset entries must be objects");
  AssetSpec a{j.value("name", std::string{}), parse_params(j, rate), 100.0};
  if (auto s = opt_num(j, "spot")) a.spot = *s;
  if (!(a.spot > 0.0)) throw ConfigError("asset spot must be positive");
  return a;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("correlation matrix must be a non-empty array of rows");
  const std::size_t n = j.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!j[i].is_array() || j[i].size() != n) throw ConfigError("correlation matrix must be square");
    for (std::size_t k = 0; k < n; ++k) m(Eigen::Index(i), Eigen::Index(k)) = j[i][k].get<double>();
  }
  return m;
}

CorrelationMatrix checked(const Eigen::MatrixXd& m) {
  try {
    return validate_correlation(m);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("correlation: ") + e.what());
  }
}

std::string fmt_label(const char* key, double v) {
  std::ostringstream o;
  o << key << '=' << v;
  return o.str();
}

}  // namespace

UouParams parse_params(const json& j, double rate) {
  if (!j.is_object()) throw ConfigError("parameter block must be an object");
  const auto rho = opt_num(j, "rho"), ups = opt_num(j, "upsilon"), kap = opt_num(j, "kappa");
  const auto lam = opt_num(j, "lambda"), nu = opt_num(j, "nu");
  const double c = get_num(j, "c");
  const double r = opt_num(j, "rate").value_or(rate);
  try {
    if (lam && nu) {
      const double rr = rho ? *rho : (ups ? *ups * *lam : throw ConfigError("parameter block: need rho or upsilon"));
      UouParams p(*lam, *nu, c, rr, r);
      if (kap) agree("kappa", *kap, p.kappa());
      if (ups) agree("upsilon", *ups, p.upsilon());
      return p;
    }
    if (!rho || !ups || !kap)
      throw ConfigError("parameter block: give either (rho, upsilon, c, kappa) or (lambda, nu, c, rho)");
    UouParams p = UouParams::from_fit(*rho, *ups, c, *kap, r);
    if (lam) agree("lambda", *lam, p.lambda());
    if (nu) agree("nu", *nu, p.nu());
    return p;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("parameter block: ") + e.what());
  }
}

json params_json(const UouParams& p) {
  return json{{"rho", p.rho()},     {"upsilon", p.upsilon()}, {"c", p.c()},       {"kappa", p.kappa()},
              {"lambda", p.lambda()}, {"nu", p.nu()},         {"rate", p.rate()}};
}

std::vector<CorrelationCase> parse_correlation(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw ConfigError("'correlation' must be an object");
  int sources = 0;
  for (const char* k : {"matrix", "csv", "random_gram", "theta"}) sources += j.contains(k) ? 1 : 0;
  if (sources != 1) throw ConfigError("'correlation' needs exactly one of matrix, csv, random_gram, theta");

  std::vector<CorrelationCase> out;
  if (j.contains("theta")) {
    const json& t = j["theta"];
    const std::vector<double> thetas = t.is_array() ? t.get<std::vector<double>>() : std::vector<double>{t.get<double>()};
    for (double th : thetas) {
      if (!(th > -1.0 && th < 1.0)) throw ConfigError("theta must lie in (-1, 1)");
      out.push_back({fmt_label("theta", th), pair_correlation(th)});
    }
    return out;
  }
  CorrelationMatrix full = identity_correlation(1);
  if (j.contains("matrix")) {
    full = checked(matrix_from_json(j["matrix"]));
  } else if (j.contains("csv")) {
    std::string path = j["csv"].get<std::string>();
    if (std::filesystem::path(path).is_relative()) path = (std::filesystem::path(base_dir) / path).string();
    full = checked(read_matrix_csv(path));
  } else {
    const json& g = j["random_gram"];
    full = random_correlation_gram(g.at("n").get<std::size_t>(), g.at("seed").get<std::uint64_t>());
  }
  if (j.contains("leading")) {
    for (std::size_t n : j["leading"].get<std::vector<std::size_t>>()) {
      if (n == 0 || n > full.dim()) throw ConfigError("leading size " + std::to_string(n) + " out of range");
      out.push_back({"n=" + std::to_string(n), leading_submatrix(full, n)});
    }
  } else {
    out.push_back({"n=" + std::to_string(full.dim()), full});
  }
  return out;
}

MultiAssetModel RunConfig::model(const CorrelationCase& c) const {
  const std::size_t n = c.corr.dim();
  std::vector<UouParams> ms;
  std::vector<double> spots;
  if (!assets.empty()) {
    if (assets.size() < n)
      throw ConfigError("correlation case " + c.label + " needs " + std::to_string(n) + " assets, config has " +
                        std::to_string(assets.size()));
    for (std::size_t k = 0; k < n; ++k) {
      ms.push_back(assets[k].params);
      spots.push_back(assets[k].spot);
    }
  } else if (asset_template) {
    ms.assign(n, asset_template->params);
    spots.assign(n, asset_template->spot);
  } else {
    throw ConfigError("config has no assets");
  }
  MultiAssetModel m{ms, c.corr, spots};
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return m;
}

std::string RunConfig::resolve(const std::string& path) const {
  if (std::filesystem::path(path).is_relative() && !base_dir.empty())
    return (std::filesystem::path(base_dir) / path).string();
  return path;
}

RunConfig empty_config() {
  RunConfig c;
  c.raw = json::object();
  return c;
}

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  c.raw = j;
  c.base_dir = base_dir;
  try {
    c.rate = j.value("rate", 0.0);
    if (j.contains("assets")) {
      const json& a = j["assets"];
      if (a.is_string()) {
        // a parameter file such as fixtures/params_4assets.json
        const json f = json::parse(read_text_file(c.resolve(a.get<std::string>())), nullptr, true, true);
        const double r = f.value("rate", c.rate);
        if (!j.contains("rate")) c.rate = r;
        for (const auto& e : f.at("assets")) c.assets.push_back(parse_asset(e, c.rate));
      } else if (a.is_array()) {
        for (const auto& e : a) c.assets.push_back(parse_asset(e, c.rate));
      } else {
        throw ConfigError("'assets' must be a list or a parameter file path");
      }
    }
    if (j.contains("asset")) c.asset_template = parse_asset(j["asset"], c.rate);
    if (!c.assets.empty() && c.asset_template) throw ConfigError("give either 'assets' or 'asset', not both");
    if (j.contains("correlation")) c.cases = parse_correlation(j["correlation"], base_dir);
    if (j.contains("grid")) {
      c.steps = j["grid"].value("steps", c.steps);
      c.maturity = j["grid"].value("maturity", c.maturity);
    }
    c.scenarios = j.value("scenarios", c.scenarios);
    c.workers = j.value("workers", c.workers);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.steps == 0 || !(c.maturity > 0.0)) throw ConfigError("grid needs steps >= 1 and maturity > 0");
  if (c.scenarios < 2) throw ConfigError("scenarios must be >= 2");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text, std::filesystem::path(path).parent_path().string());
}

}  // namespace bcm::app
