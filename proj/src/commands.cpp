#include "wflo/commands.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "wflo/csv.hpp"
#include "wflo/errors.hpp"
#include "wflo/log.hpp"
#include "wflo/optimizer.hpp"
#include "wflo/pce.hpp"
#include "wflo/wind_resource.hpp"

namespace wflo {
namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write {}", path.string()));
  return out;
}

Layout checked_layout(const RunConfig& cfg, const std::filesystem::path& layout_file) {
  Layout layout = read_layout(layout_file);
  const FarmGrid grid(cfg.farm_width_d, cfg.farm_height_d, cfg.grid_nx, cfg.grid_ny, cfg.rotor_diameter_m);
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (!grid.contains(layout.positions[i])) {
      throw ConfigError(fmt::format("{}: turbine {} at ({}, {}) lies outside the {} x {} m farm", layout_file.string(),
                                    i, layout.positions[i].x, layout.positions[i].y, grid.width_m(),
                                    grid.height_m()));
    }
  }
  if (!spacing_feasible(layout, cfg.rotor_diameter_m)) {
    log::warn(fmt::format("{}: turbines closer than {} rotor diameters", layout_file.string(), kMinSpacingDiameters));
  }
  return layout;
}

void write_history(const std::filesystem::path& path, const std::vector<HistoryRow>& rows) {
  auto out = open_output(path);
  out << "iteration,phase,aep_wh,best_aep_wh,function_calls_cum\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{}\n", r.iteration, r.phase, format_double(r.aep_wh), format_double(r.best_aep_wh),
                       r.function_calls_cum);
  }
}

void write_archive(const std::filesystem::path& path, const std::vector<std::pair<Layout, double>>& archive) {
  auto out = open_output(path);
  out << "layout_id,turbine_idx,x_m,y_m,aep_wh\n";
  for (std::size_t id = 0; id < archive.size(); ++id) {
    const auto& [layout, aep] = archive[id];
    for (std::size_t t = 0; t < layout.size(); ++t) {
      out << fmt::format("{},{},{},{},{}\n", id, t, format_double(layout.positions[t].x),
                         format_double(layout.positions[t].y), format_double(aep));
    }
  }
}

void write_calls(const std::filesystem::path& path, const std::string& method, std::size_t evaluations,
                 std::size_t per_evaluation, std::size_t total) {
  auto out = open_output(path);
  out << "method,true_evaluations,farm_power_calls_per_evaluation,farm_power_calls\n";
  out << fmt::format("{},{},{},{}\n", method, evaluations, per_evaluation, total);
}

nlohmann::json layout_json(const Layout& layout) {
  nlohmann::json j = nlohmann::json::array();
  for (std::size_t i = 0; i < layout.size(); ++i) {
    j.push_back({{"x_m", layout.positions[i].x},
                 {"y_m", layout.positions[i].y},
                 {"vertex", i < layout.vertices.size() ? layout.vertices[i] : -1}});
  }
  return j;
}

}  // namespace

Layout read_layout(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path, {"x_m", "y_m"});
  if (table.rows.empty()) throw FormatError(fmt::format("{}: layout has no turbines", path.string()));
  Layout layout;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (!std::isfinite(row[0]) || !std::isfinite(row[1])) {
      throw FormatError(fmt::format("{}:{}: non-finite coordinate", path.string(), table.line_numbers[i]));
    }
    layout.positions.push_back({row[0], row[1]});
  }
  return layout;
}

void write_layout(const std::filesystem::path& path, const Layout& layout) {
  auto out = open_output(path);
  out << "x_m,y_m\n";
  for (const Point& p : layout.positions) out << fmt::format("{},{}\n", format_double(p.x), format_double(p.y));
}

std::string format_gwh(double aep_wh) { return fmt::format("{:.4g}", aep_wh / 1e9); }

void cmd_power(const RunConfig& cfg, const std::filesystem::path& layout_file, double direction_deg,
               double speed_ms, const std::optional<RasterOptions>& raster, std::ostream& out) {
  const TurbineSpec spec = load_turbine(cfg.turbine_file, cfg.rotor_diameter_m, cfg.hub_height_m);
  const Layout layout = checked_layout(cfg, layout_file);
  const WindCondition cond{normalize_direction(direction_deg), speed_ms};
  const FlowSolution flow = solve_flow(layout, cond, spec, cfg.wake);
  const FarmPower power = farm_power(layout, cond, spec, cfg.wake);

  fmt::print(out, "wind {} deg at {} m/s\n", format_double(cond.direction_deg), format_double(cond.speed_ms));
  fmt::print(out, "turbine,x_m,y_m,u_eff_ms,power_w\n");
  for (std::size_t i = 0; i < layout.size(); ++i) {
    fmt::print(out, "{},{},{},{:.6f},{:.1f}\n", i, format_double(layout.positions[i].x),
               format_double(layout.positions[i].y), flow.effective_speed[i], power.turbine_w[i]);
  }
  fmt::print(out, "total_power_w {:.1f}\n", power.total_w);
  if (power.clamped_deficits > 0) fmt::print(out, "clamped_deficits {}\n", power.clamped_deficits);

  if (!raster) return;
  if (raster->nx < 2 || raster->ny < 2) throw ConfigError("raster resolution must be at least 2 x 2");
  const double w = cfg.farm_width_d * cfg.rotor_diameter_m;
  const double h = cfg.farm_height_d * cfg.rotor_diameter_m;
  auto file = open_output(raster->path);
  file << "x_m,y_m,u_ms\n";
  for (int iy = 0; iy < raster->ny; ++iy) {
    const double y = h * iy / (raster->ny - 1);
    for (int ix = 0; ix < raster->nx; ++ix) {
      const double x = w * ix / (raster->nx - 1);
      const double u = field_speed(flow, layout, cond, spec, cfg.wake, {x, y}, spec.hub_height_m);
      file << fmt::format("{},{},{}\n", format_double(x), format_double(y), format_double(u));
    }
  }
  fmt::print(out, "raster {} ({} x {})\n", raster->path.string(), raster->nx, raster->ny);
}

void cmd_aep(const RunConfig& cfg, const std::filesystem::path& layout_file, AepMethod method,
             std::ostream& out) {
  const FarmProblem problem = make_problem(cfg);
  const Layout layout = checked_layout(cfg, layout_file);
  if (method == AepMethod::Baseline) {
    const AepResult r = baseline_aep(layout, problem.rose, problem.turbine, problem.wake, cfg.threads);
    fmt::print(out, "method baseline\naep_gwh {}\nfarm_power_calls {}\n", format_gwh(r.aep_wh), r.farm_power_calls);
    return;
  }
  const PceOptions opts{cfg.pce_max_order, cfg.pce_cv_folds, cfg.threads};
  const PceAepResult r =
      estimate_aep(layout, problem.rose, cfg.pce_samples, cfg.seed, problem.turbine, problem.wake, opts);
  fmt::print(out, "method pce\naep_gwh {}\nfarm_power_calls {}\npce_order {}\nseed {}\n", format_gwh(r.aep_wh),
             r.farm_power_calls, r.model.order, cfg.seed);
}

int cmd_optimize(const RunConfig& cfg, OptimizeMode mode, std::ostream& out) {
  const FarmProblem problem = make_problem(cfg);
  std::filesystem::create_directories(cfg.output_dir);
  const auto dir = cfg.output_dir;
  {
    auto manifest = open_output(dir / "manifest.cfg");
    manifest << render_manifest(cfg);
  }

  nlohmann::json summary;
  summary["n_turbines"] = cfg.n_turbines;
  summary["grid"] = {{"nx", cfg.grid_nx}, {"ny", cfg.grid_ny}, {"width_d", cfg.farm_width_d},
                     {"height_d", cfg.farm_height_d}};
  summary["seed"] = cfg.seed;
  int exit_code = 0;

  if (mode == OptimizeMode::Direct) {
    const DirectConfig dc = make_direct_config(cfg);
    const DirectResult r = direct_optimize(problem, dc);
    const std::size_t per_eval =
        dc.mode == AepMode::Traversal ? problem.rose.cell_count() : dc.pce_samples;
    write_layout(dir / "best_layout.csv", r.best);
    write_history(dir / "history.csv", r.history);
    write_archive(dir / "archive.csv", r.archive);
    write_calls(dir / "function_calls.csv", dc.mode == AepMode::Traversal ? "direct_traversal" : "direct_pce",
                r.evaluations, per_eval, r.farm_power_calls);
    summary["mode"] = "direct";
    summary["aep_mode"] = dc.mode == AepMode::Traversal ? "traversal" : "pce";
    summary["converged"] = true;
    summary["best_aep_wh"] = r.best_aep_wh;
    summary["true_evaluations"] = r.evaluations;
    summary["farm_power_calls"] = r.farm_power_calls;
    summary["generations"] = r.generations;
    summary["ga_seed"] = dc.ga.seed;
    summary["best_layout"] = layout_json(r.best);
    fmt::print(out, "direct: best AEP {} GWh after {} evaluations, {} farm_power calls\n", format_gwh(r.best_aep_wh),
               r.evaluations, r.farm_power_calls);
  } else {
    const SboConfig sc = make_sbo_config(cfg);
    const SboResult r = sbo_run(problem, sc);
    std::vector<std::pair<Layout, double>> archive;
    nlohmann::json seeds = nlohmann::json::array();
    for (const auto& e : r.state.archive) {
      archive.emplace_back(e.layout, e.aep_wh);
      seeds.push_back({{"pce_seed", e.pce_seed}, {"phase", to_string(e.phase)}});
    }
    write_layout(dir / "best_layout.csv", r.best);
    write_history(dir / "history.csv", r.history);
    write_archive(dir / "archive.csv", archive);
    write_calls(dir / "function_calls.csv", sc.use_ei ? "sbo_ei" : "sbo_msp", r.report.true_evaluations,
                sc.pce_samples, r.report.function_calls);
    {
      auto audit = open_output(dir / "audit.log");
      for (const auto& line : r.state.audit) audit << line << '\n';
    }
    summary["mode"] = "sbo";
    summary["use_ei"] = sc.use_ei;
    summary["converged"] = r.report.converged;
    summary["best_aep_wh"] = r.report.best_aep_wh;
    summary["true_evaluations"] = r.report.true_evaluations;
    summary["farm_power_calls"] = r.report.function_calls;
    summary["final_max_ei"] = r.report.final_max_ei;
    summary["msp_converged_at"] = r.state.msp_converged_at;
    summary["msp_best_aep_wh"] = r.state.msp_best_aep_wh;
    summary["iterations"] = r.state.iteration;
    summary["kriging_fits"] = r.state.kriging_fits;
    summary["kriging"] = r.state.model.to_json();
    summary["archive_seeds"] = seeds;
    summary["best_layout"] = layout_json(r.best);
    fmt::print(out, "sbo: best AEP {} GWh after {} evaluations, {} farm_power calls, {}\n",
               format_gwh(r.report.best_aep_wh), r.report.true_evaluations, r.report.function_calls,
               r.report.converged ? "converged" : "evaluation cap reached");
    if (!r.report.converged) exit_code = 3;
  }

  auto file = open_output(dir / "summary.json");
  file << summary.dump(2) << '\n';
  fmt::print(out, "outputs written to {}\n", dir.string());
  return exit_code;
}

}  // namespace wflo
