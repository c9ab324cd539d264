#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "bcm/corrmat.hpp"
#include "bcm/errors.hpp"

namespace {

using bcm::app::RunConfig;

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kNumerical = 4 };

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw bcm::DataError("cannot write " + out_path);
  f << text;
}

RunConfig load(const std::string& path, const bcm::app::Overrides& o) {
  RunConfig c = path.empty() ? bcm::app::empty_config() : bcm::app::load_config(path);
  bcm::app::apply(c, o);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bcm: bridge-copula multi-asset pricing and calibration"};
  app.require_subcommand(1);

  std::string config_path, out_path, quotes_path, history_path, matrix_path;
  std::uint64_t seed = 0;
  std::size_t workers = 0, scenarios = 0, n = 0;

  auto common = [&](CLI::App* s, bool needs_config) {
    auto* opt = s->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    if (needs_config) opt->required();
    s->add_option("--seed", seed, "override the config seed");
    s->add_option("--workers", workers, "override the worker count")->check(CLI::PositiveNumber);
    s->add_option("--scenarios", scenarios, "override the scenario count")->check(CLI::PositiveNumber);
    s->add_option("--out", out_path, "output file (.json or .csv; default stdout)");
  };

  auto* simulate = app.add_subcommand("simulate", "write simulated paths as CSV");
  auto* asian = app.add_subcommand("price-asian", "Asian basket call");
  auto* european = app.add_subcommand("price-european", "European basket option");
  auto* bermudan = app.add_subcommand("price-bermudan", "Bermudan option by regression");
  auto* smile = app.add_subcommand("smile", "model call prices and implied vols");
  auto* cal_single = app.add_subcommand("calibrate-single", "fit one marginal to quotes or a price history");
  auto* cal_corr = app.add_subcommand("calibrate-corr", "fit the copula correlation to a price history");
  auto* gen_corr = app.add_subcommand("gen-corr", "random correlation matrix");
  auto* repair_corr = app.add_subcommand("repair-corr", "nearest correlation matrix (eigenvalue clipping)");

  for (auto* s : {simulate, asian, european, bermudan, smile}) common(s, true);
  common(cal_single, false);
  common(cal_corr, false);
  common(gen_corr, false);
  common(repair_corr, false);

  auto* qo = cal_single->add_option("--quotes", quotes_path, "option quotes CSV")->check(CLI::ExistingFile);
  auto* ho = cal_single->add_option("--history", history_path, "price history CSV")->check(CLI::ExistingFile);
  qo->excludes(ho);
  cal_corr->add_option("--history", history_path, "price history CSV")->required()->check(CLI::ExistingFile);
  gen_corr->add_option("--n", n, "dimension")->required()->check(CLI::PositiveNumber);
  repair_corr->add_option("matrix", matrix_path, "matrix CSV")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  bcm::app::Overrides o;
  auto given = [](CLI::App* s, const char* name) { return s->count(name) > 0; };
  CLI::App* sub = app.get_subcommands().front();
  if (given(sub, "--seed")) o.seed = seed;
  if (given(sub, "--workers")) o.workers = workers;
  if (given(sub, "--scenarios")) o.scenarios = scenarios;

  try {
    if (sub == simulate) {
      emit(out_path, bcm::app::cmd_simulate(load(config_path, o)));
    } else if (sub == asian || sub == european || sub == bermudan) {
      const RunConfig c = load(config_path, o);
      const auto rows = sub == asian      ? bcm::app::cmd_price_asian(c)
                        : sub == european ? bcm::app::cmd_price_european(c)
                                          : bcm::app::cmd_price_bermudan(c);
      if (out_path.empty())
        std::cout << bcm::app::rows_json(rows).dump(2) << '\n';
      else
        bcm::app::write_rows(out_path, rows);
    } else if (sub == smile) {
      emit(out_path, bcm::app::cmd_smile(load(config_path, o)));
    } else if (sub == cal_single) {
      const auto j = bcm::app::cmd_calibrate_single(load(config_path, o), quotes_path, history_path);
      emit(out_path, j.dump(2) + "\n");
    } else if (sub == cal_corr) {
      nlohmann::json details;
      const auto m = bcm::app::cmd_calibrate_corr(load(config_path, o), history_path, &details);
      std::cerr << details.dump(2) << '\n';
      emit(out_path, bcm::format_matrix_csv(m));
    } else if (sub == gen_corr) {
      const RunConfig c = load(config_path, o);
      emit(out_path, bcm::format_matrix_csv(bcm::app::cmd_gen_corr(n, c.seed)));
    } else if (sub == repair_corr) {
      emit(out_path, bcm::format_matrix_csv(bcm::app::cmd_repair_corr(matrix_path)));
    }
  } catch (const bcm::app::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const bcm::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const bcm::NonConvergence& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfig;
  } catch (const std::runtime_error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOk;
}
