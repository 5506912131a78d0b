#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "wflo/farm_model.hpp"
#include "wflo/run_config.hpp"

namespace wflo {

/// Reads an `x_m,y_m` layout CSV. Malformed rows raise FormatError with their line number.
Layout read_layout(const std::filesystem::path& path);
void write_layout(const std::filesystem::path& path, const Layout& layout);

struct RasterOptions {
  std::filesystem::path path;
  int nx = 200;
  int ny = 200;
};

/// Per-turbine and total power for one wind condition; optionally writes the
/// hub-height speed field as `x_m,y_m,u_ms` rows.
void cmd_power(const RunConfig& cfg, const std::filesystem::path& layout_file, double direction_deg,
               double speed_ms, const std::optional<RasterOptions>& raster, std::ostream& out);

enum class AepMethod { Baseline, Pce };

void cmd_aep(const RunConfig& cfg, const std::filesystem::path& layout_file, AepMethod method,
             std::ostream& out);

enum class OptimizeMode { Direct, Sbo };

/// Runs the optimization and writes best_layout.csv, history.csv,
/// archive.csv, function_calls.csv, summary.json and manifest.cfg into
/// cfg.output_dir. Returns 0 when converged, 3 when the evaluation cap stopped it.
int cmd_optimize(const RunConfig& cfg, OptimizeMode mode, std::ostream& out);

/// AEP in GWh with four significant digits.
std::string format_gwh(double aep_wh);

}  // namespace wflo
