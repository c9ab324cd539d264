#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "bcm/io.hpp"
#include "commands.hpp"
#include "params.hpp"
#include "synthetic.hpp"

using namespace bcm;
using namespace bcm::app;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  const auto d = fs::temp_directory_path() / "bcm_cli_test";
  fs::create_directories(d);
  return d;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

int run(const std::string& args) {
  const std::string cmd = std::string(BCM_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string config_path(const char* name) { return std::string(BCM_SOURCE_DIR) + "/fixtures/configs/" + name; }

}  // namespace

TEST(GenCorr, OneAssetIsOne) {
  const auto m = cmd_gen_corr(1, 5);
  ASSERT_EQ(m.rows(), 1);
  EXPECT_EQ(m(0, 0), 1.0);
  EXPECT_THROW(cmd_gen_corr(0, 5), ConfigError);
}

TEST(GenCorr, RoundTripsThroughConfigCsv) {
  const auto m = cmd_gen_corr(6, 77);
  const auto dir = scratch();
  write_matrix_csv((dir / "r.csv").string(), m);
  write(dir / "c.json", R"({"rate": 0.05, "asset": {"rho": 0.02, "upsilon": 0.5, "c": 100, "kappa": 1},
                            "correlation": {"csv": "r.csv"}})");
  const auto c = load_config((dir / "c.json").string());
  ASSERT_EQ(c.cases.size(), 1u);
  EXPECT_EQ(c.cases[0].corr.matrix(), m);
  EXPECT_LT((cmd_repair_corr((dir / "r.csv").string()) - m).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Config, ParameterFormsMustAgree) {
  const auto p = parse_params(nlohmann::json::parse(R"({"rho": 0.02, "upsilon": 0.5, "c": 100, "kappa": 1})"), 0.05);
  const auto q = parse_params(
      nlohmann::json{{"lambda", p.lambda()}, {"nu", p.nu()}, {"c", 100}, {"rho", 0.02}}, 0.05);
  EXPECT_EQ(p, q);
  EXPECT_NO_THROW(parse_params(
      nlohmann::json{{"rho", 0.02}, {"upsilon", 0.5}, {"c", 100}, {"kappa", 1}, {"lambda", p.lambda()}}, 0.05));
  EXPECT_THROW(parse_params(nlohmann::json{{"rho", 0.02}, {"upsilon", 0.5}, {"c", 100}, {"kappa", 1}, {"lambda", 0.1}},
                            0.05),
               ConfigError);
  EXPECT_THROW(parse_params(nlohmann::json{{"rho", 0.02}, {"c", 100}}, 0.05), ConfigError);
  EXPECT_THROW(parse_params(nlohmann::json{{"rho", -1}, {"upsilon", 0.5}, {"c", 100}, {"kappa", 1}}, 0.05), ConfigError);
}

TEST(Config, RejectsBadBlocks) {
  const std::string asset = R"("asset": {"rho": 0.02, "upsilon": 0.5, "c": 100, "kappa": 1})";
  EXPECT_THROW(parse_config("{" + asset + R"(, "correlation": {"theta": 0.5, "matrix": [[1]]}})"), ConfigError);
  EXPECT_THROW(parse_config("{" + asset + R"(, "correlation": {"theta": 1.0}})"), ConfigError);
  EXPECT_THROW(parse_config("{" + asset + R"(, "correlation": {"matrix": [[1, 0.5], [0.4, 1]]}})"), ConfigError);
  EXPECT_THROW(parse_config("{" + asset + R"(, "correlation": {"random_gram": {"n": 3, "seed": 1}, "leading": [4]}})"),
               ConfigError);
  EXPECT_THROW(parse_config("{" + asset + R"(, "scenarios": 1})"), ConfigError);
  EXPECT_THROW(parse_config("{" + asset + R"(, "assets": [)" + asset.substr(9) + "]}"), ConfigError);
  EXPECT_THROW(parse_config("[1, 2]"), ConfigError);
  EXPECT_THROW(parse_config("{not json"), ConfigError);
  // comments are allowed
  EXPECT_NO_THROW(parse_config("{ // thick set\n" + asset + "}"));
}

TEST(Config, OverridesApply) {
  auto c = load_config(config_path("asian_theta_grid.json"));
  EXPECT_EQ(c.cases.size(), 3u);
  apply(c, {7, 2, 500});
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.workers, 2u);
  EXPECT_EQ(c.scenarios, 500u);
  EXPECT_THROW(apply(c, {std::nullopt, std::nullopt, 1}), ConfigError);
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* f : {"asian_theta_grid.json", "asian_dimension_scan.json", "european_max_put.json",
                        "bermudan_max_put.json", "smile_thin.json"}) {
    const auto c = load_config(config_path(f));
    for (const auto& k : c.cases) EXPECT_NO_THROW(c.model(k)) << f << ' ' << k.label;
  }
  const auto scan = load_config(config_path("asian_dimension_scan.json"));
  ASSERT_EQ(scan.cases.size(), 4u);
  EXPECT_EQ(scan.cases[3].corr.dim(), 10u);
}

TEST(Commands, AsianGridGivesOneRowPerCaseAndStrike) {
  auto c = load_config(config_path("asian_theta_grid.json"));
  c.steps = 10;
  apply(c, {std::nullopt, 1, 2000});
  const auto rows = cmd_price_asian(c);
  ASSERT_EQ(rows.size(), 9u);
  const auto csv = rows_csv(rows);
  EXPECT_EQ(csv.rfind(rows_csv_header(), 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 10);
  const auto j = rows_json(rows);
  EXPECT_EQ(j[0]["instrument"], "asian_basket_call");
  EXPECT_EQ(j[0]["scenarios"], 2000);

  const auto out = scratch() / "rows.csv";
  fs::remove(out);
  write_rows(out.string(), rows);
  write_rows(out.string(), rows);
  const std::string text = read_text_file(out.string());
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 19);
}

TEST(Commands, SmileProducesImpliedVols) {
  auto c = load_config(config_path("smile_thin.json"));
  const std::string csv = cmd_smile(c);
  EXPECT_EQ(csv.rfind("strike,maturity,price,implied_vol", 0), 0u);
  EXPECT_GT(std::count(csv.begin(), csv.end(), '\n'), 10);
}

TEST(Commands, CorrelationCalibrationFromHistory) {
  const auto p = fixtures::thick();
  const auto s = fixtures::simulate_series({p, p}, pair_correlation(0.6), 120, 4);
  PriceHistory h{business_days("2024-01-02", s.size()), {"A", "B"}, s};
  const auto dir = scratch();
  write(dir / "h.csv", format_history_csv(h));
  auto c = parse_config(R"({"rate": 0.05, "assets": [{"name": "A", "rho": 0.02, "upsilon": 0.5, "c": 100, "kappa": 1},
                                                     {"name": "B", "rho": 0.02, "upsilon": 0.5, "c": 100, "kappa": 1}]})");
  nlohmann::json details;
  const auto r = cmd_calibrate_corr(c, (dir / "h.csv").string(), &details);
  EXPECT_NEAR(r(0, 1), 0.6, 0.2);
  EXPECT_EQ(details["cdf_evaluations"], 2);
  EXPECT_EQ(details["fitted"].size(), 2u);
  EXPECT_EQ(details["method"], "bridge");
}

TEST(Binary, ExitCodes) {
  EXPECT_EQ(run("gen-corr --n 3"), 0);
  EXPECT_EQ(run("gen-corr --n 0"), 2);
  EXPECT_EQ(run("price-asian --config /nonexistent.json"), 2);
  EXPECT_EQ(run("no-such-command"), 2);
  const auto dir = scratch();
  write(dir / "bad.json", "{\"scenarios\": 1}");
  EXPECT_EQ(run("price-asian --config " + (dir / "bad.json").string()), 2);
  write(dir / "q.csv", "strike,maturity,mid\n100,oops,1\n");
  write(dir / "s.json", R"({"rate": 0.05, "calibration": {"spot": 100}})");
  EXPECT_EQ(run("calibrate-single --config " + (dir / "s.json").string() + " --quotes " + (dir / "q.csv").string()), 3);
  write(dir / "m.csv", "1,2\n");
  EXPECT_EQ(run("repair-corr " + (dir / "m.csv").string()), 3);
}
