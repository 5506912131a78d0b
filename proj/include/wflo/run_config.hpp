#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "wflo/farm_model.hpp"
#include "wflo/kriging.hpp"
#include "wflo/optimizer.hpp"
#include "wflo/wind_resource.hpp"

namespace wflo {

/// Everything a run needs. Paths are absolute once loaded.
struct RunConfig {
  std::filesystem::path turbine_file;
  double rotor_diameter_m = 126.0;
  double hub_height_m = 90.0;

  std::filesystem::path wind_rose_file;
  SpeedDistribution speed;

  double farm_width_d = 8.0;
  double farm_height_d = 8.0;
  int grid_nx = 9;
  int grid_ny = 9;
  int n_turbines = 8;

  WakeParams wake;

  std::size_t pce_samples = 50;
  int pce_max_order = 10;
  int pce_cv_folds = 5;

  KrigingOptions kriging;
  int kriging_refit_starts = 2;

  GaConfig ga;

  std::size_t sbo_initial_multiplier = 5;
  std::size_t sbo_max_evaluation_multiplier = 50;
  bool sbo_use_ei = true;
  double sbo_ei_threshold = 0.1;
  bool sbo_ei_raw_scale = false;
  int sbo_duplicate_retries = 10;

  AepMode direct_aep_mode = AepMode::Traversal;

  std::uint64_t seed = 1;
  int threads = 0;
  std::filesystem::path output_dir = "output";
};

/// Parses flat `key = value` lines; `#` starts a comment. Unknown or repeated
/// keys are errors. Relative paths resolve against `base_dir`.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir,
                           const std::string& source_name = "<config>");

/// Reads a config file. WFLO_OUTPUT_DIR, when set, replaces output_dir.
RunConfig load_run_config(const std::filesystem::path& path);

/// Fully resolved config in the same format; parsing it yields an identical RunConfig.
std::string render_manifest(const RunConfig& cfg);

FarmProblem make_problem(const RunConfig& cfg);
SboConfig make_sbo_config(const RunConfig& cfg);
DirectConfig make_direct_config(const RunConfig& cfg);

}  // namespace wflo
