#pragma once

#include <filesystem>

#include "wflo/farm_model.hpp"
#include "wflo/wind_resource.hpp"

namespace fixtures {

inline std::filesystem::path source_dir() { return WFLO_SOURCE_DIR; }

inline wflo::TurbineSpec turbine() {
  return wflo::load_turbine(source_dir() / "data/nrel_5mw.csv", 126.0, 90.0);
}

inline wflo::WindRose rose(wflo::SpeedDistribution speed = {}) {
  return wflo::load_wind_rose(source_dir() / "data/windrose_example.csv", speed);
}

}  // namespace fixtures
