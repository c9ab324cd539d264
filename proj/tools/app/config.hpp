#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bcm/calib.hpp"
#include "bcm/corrmat.hpp"
#include "bcm/pricer.hpp"
#include "bcm/uou.hpp"

namespace bcm::app {

// Bad or inconsistent configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AssetSpec {
  std::string name;
  UouParams params;
  double spot = 100.0;
};

// One entry of the correlation sweep, e.g. theta = 0.75 or n = 5.
struct CorrelationCase {
  std::string label;
  CorrelationMatrix corr;
};

struct RunConfig {
  double rate = 0.0;
  std::vector<AssetSpec> assets;           // explicit list
  std::optional<AssetSpec> asset_template;  // replicated to the case dimension
  std::vector<CorrelationCase> cases;
  std::size_t steps = 100;
  double maturity = 1.0;
  std::size_t scenarios = 100000;
  std::size_t workers = 1;
  std::uint64_t seed = 1;
  std::string base_dir;  // relative paths in the config resolve against this
  nlohmann::json raw;

  MultiAssetModel model(const CorrelationCase& c) const;
  std::string resolve(const std::string& path) const;
};

// Parameter block: {rho, upsilon, c, kappa} or {lambda, nu, c, rho}; when
// both forms are present they must agree to 1e-12 (relative).
UouParams parse_params(const nlohmann::json& j, double rate);
nlohmann::json params_json(const UouParams& p);

RunConfig parse_config(const std::string& text, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);
// Config with no file: defaults only.
RunConfig empty_config();

// Resolves a correlation block into the list of cases it describes.
std::vector<CorrelationCase> parse_correlation(const nlohmann::json& j, const std::string& base_dir);

}  // namespace bcm::app
