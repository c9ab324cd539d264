#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"

namespace bcm::app {

// Command-line overrides of the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> scenarios;
};

void apply(RunConfig& c, const Overrides& o);

struct ResultRow {
  std::string instrument;
  std::string label;  // correlation case
  double strike = 0.0;
  nlohmann::json parameters;
  McEstimate estimate;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

std::string rows_csv_header();
std::string rows_csv(const std::vector<ResultRow>& rows, bool header = true);
nlohmann::json rows_json(const std::vector<ResultRow>& rows);
// .json: write an array of records; anything else: append CSV rows, adding
// the header when the file is new or empty.
void write_rows(const std::string& path, const std::vector<ResultRow>& rows);

std::vector<ResultRow> cmd_price_asian(const RunConfig& c);
std::vector<ResultRow> cmd_price_european(const RunConfig& c);
std::vector<ResultRow> cmd_price_bermudan(const RunConfig& c);

// Paths for the first correlation case, CSV scenario,time,asset,value.
std::string cmd_simulate(const RunConfig& c);

// Exactly one of quotes_path / history_path.
nlohmann::json cmd_calibrate_single(const RunConfig& c, const std::string& quotes_path,
                                    const std::string& history_path);
// Returns the repaired matrix; `details` receives candidate, loglik and counters.
Eigen::MatrixXd cmd_calibrate_corr(const RunConfig& c, const std::string& history_path, nlohmann::json* details);

Eigen::MatrixXd cmd_gen_corr(std::size_t n, std::uint64_t seed);
Eigen::MatrixXd cmd_repair_corr(const std::string& matrix_csv_path);

// Model call prices and Black-Scholes implied vols on a strike x maturity
// grid for the first asset; CSV strike,maturity,price,implied_vol.
std::string cmd_smile(const RunConfig& c);

nlohmann::json calibration_json(const CalibrationResult& r);

}  // namespace bcm::app
