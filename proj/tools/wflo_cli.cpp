#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wflo/commands.hpp"
#include "wflo/errors.hpp"
#include "wflo/log.hpp"
#include "wflo/run_config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Wind farm layout optimization with PCE-based AEP and Kriging surrogates"};
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Print progress information");
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");

  std::string config;
  std::string layout;

  auto* power = app.add_subcommand("power", "Per-turbine power for one wind condition");
  double direction = 270.0;
  double speed = 8.0;
  std::string raster_path;
  int raster_nx = 200;
  int raster_ny = 200;
  power->add_option("--config", config, "Run configuration")->required()->check(CLI::ExistingFile);
  power->add_option("--layout", layout, "Layout CSV (x_m,y_m)")->required()->check(CLI::ExistingFile);
  power->add_option("--direction", direction, "Wind direction, degrees (meteorological)");
  power->add_option("--speed", speed, "Free-stream speed, m/s");
  power->add_option("--raster", raster_path, "Write the hub-height speed field to this CSV");
  power->add_option("--raster-nx", raster_nx, "Raster columns")->check(CLI::Range(2, 10000));
  power->add_option("--raster-ny", raster_ny, "Raster rows")->check(CLI::Range(2, 10000));

  auto* aep = app.add_subcommand("aep", "Annual energy production of a layout");
  std::string method = "baseline";
  aep->add_option("--config", config, "Run configuration")->required()->check(CLI::ExistingFile);
  aep->add_option("--layout", layout, "Layout CSV (x_m,y_m)")->required()->check(CLI::ExistingFile);
  aep->add_option("--method", method, "baseline or pce")->check(CLI::IsMember({"baseline", "pce"}));

  auto* optimize = app.add_subcommand("optimize", "Direct GA or surrogate-based layout optimization");
  std::string mode = "sbo";
  optimize->add_option("--config", config, "Run configuration")->required()->check(CLI::ExistingFile);
  optimize->add_option("--mode", mode, "direct or sbo")->check(CLI::IsMember({"direct", "sbo"}));

  CLI11_PARSE(app, argc, argv);
  if (verbose) wflo::log::level() = wflo::log::Level::Info;
  if (quiet) wflo::log::level() = wflo::log::Level::Quiet;

  try {
    const wflo::RunConfig cfg = wflo::load_run_config(config);
    if (power->parsed()) {
      std::optional<wflo::RasterOptions> raster;
      if (!raster_path.empty()) raster = wflo::RasterOptions{raster_path, raster_nx, raster_ny};
      wflo::cmd_power(cfg, layout, direction, speed, raster, std::cout);
      return 0;
    }
    if (aep->parsed()) {
      wflo::cmd_aep(cfg, layout, method == "pce" ? wflo::AepMethod::Pce : wflo::AepMethod::Baseline, std::cout);
      return 0;
    }
    return wflo::cmd_optimize(cfg, mode == "direct" ? wflo::OptimizeMode::Direct : wflo::OptimizeMode::Sbo,
                              std::cout);
  } catch (const wflo::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const wflo::FormatError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
