#include "wflo/run_config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "wflo/csv.hpp"
#include "wflo/errors.hpp"

namespace wflo {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(fmt::format("{}: '{}' is not a valid number", key, value));
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(fmt::format("{}: expected true or false, got '{}'", key, value));
}

std::string render_bool(bool b) { return b ? "true" : "false"; }

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&, const std::filesystem::path&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define WFLO_NUMBER(name, member, type)                                                                   \
  Field {                                                                                                 \
    name, [](RunConfig& c, const std::string& v, const std::filesystem::path&) {                         \
      c.member = parse_number<type>(name, v);                                                             \
    },                                                                                                    \
        [](const RunConfig& c) {                                                                          \
          if constexpr (std::is_floating_point_v<type>) return format_double(static_cast<double>(c.member)); \
          else return fmt::format("{}", c.member);                                                       \
        }                                                                                                 \
  }

#define WFLO_BOOL(name, member)                                                                           \
  Field {                                                                                                 \
    name, [](RunConfig& c, const std::string& v, const std::filesystem::path&) {                         \
      c.member = parse_bool(name, v);                                                                     \
    },                                                                                                    \
        [](const RunConfig& c) { return render_bool(c.member); }                                         \
  }

#define WFLO_PATH(name, member)                                                                           \
  Field {                                                                                                 \
    name, [](RunConfig& c, const std::string& v, const std::filesystem::path& base) {                    \
      const std::filesystem::path p(v);                                                                   \
      c.member = (p.is_absolute() ? p : base / p).lexically_normal();                                     \
    },                                                                                                    \
        [](const RunConfig& c) { return c.member.string(); }                                             \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      WFLO_PATH("turbine_file", turbine_file),
      WFLO_NUMBER("rotor_diameter_m", rotor_diameter_m, double),
      WFLO_NUMBER("hub_height_m", hub_height_m, double),
      WFLO_PATH("wind_rose_file", wind_rose_file),
      Field{"speed_mode",
            [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
              if (v == "weibull") c.speed.mode = SpeedMode::Weibull;
              else if (v == "constant") c.speed.mode = SpeedMode::Constant;
              else throw ConfigError(fmt::format("speed_mode: expected weibull or constant, got '{}'", v));
            },
            [](const RunConfig& c) { return std::string(c.speed.mode == SpeedMode::Weibull ? "weibull" : "constant"); }},
      WFLO_NUMBER("weibull_shape", speed.shape, double),
      WFLO_NUMBER("weibull_scale", speed.scale, double),
      WFLO_NUMBER("speed_lower_ms", speed.lower_ms, double),
      WFLO_NUMBER("speed_upper_ms", speed.upper_ms, double),
      WFLO_NUMBER("speed_bin_width_ms", speed.bin_width_ms, double),
      WFLO_NUMBER("constant_speed_ms", speed.constant_ms, double),
      WFLO_NUMBER("farm_width_d", farm_width_d, double),
      WFLO_NUMBER("farm_height_d", farm_height_d, double),
      WFLO_NUMBER("grid_nx", grid_nx, int),
      WFLO_NUMBER("grid_ny", grid_ny, int),
      WFLO_NUMBER("n_turbines", n_turbines, int),
      WFLO_NUMBER("k_star", wake.k_star, double),
      WFLO_NUMBER("rotor_sample_points", wake.rotor_sample_points, int),
      WFLO_NUMBER("pce_samples", pce_samples, std::size_t),
      WFLO_NUMBER("pce_max_order", pce_max_order, int),
      WFLO_NUMBER("pce_cv_folds", pce_cv_folds, int),
      Field{"kriging_trend",
            [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
              try {
                c.kriging.trend = trend_from_string(v);
              } catch (const std::exception&) {
                throw ConfigError(fmt::format("kriging_trend: expected constant, linear or quadratic, got '{}'", v));
              }
            },
            [](const RunConfig& c) { return to_string(c.kriging.trend); }},
      WFLO_NUMBER("kriging_nugget", kriging.nugget, double),
      WFLO_NUMBER("kriging_starts", kriging.starts, int),
      WFLO_NUMBER("kriging_refit_starts", kriging_refit_starts, int),
      WFLO_NUMBER("kriging_max_iterations", kriging.max_iterations, int),
      WFLO_NUMBER("kriging_log10_theta_min", kriging.log10_theta_min, double),
      WFLO_NUMBER("kriging_log10_theta_max", kriging.log10_theta_max, double),
      WFLO_NUMBER("ga_population_size", ga.population_size, int),
      WFLO_NUMBER("ga_max_generations", ga.max_generations, int),
      WFLO_NUMBER("ga_stall_generations", ga.stall_generations, int),
      WFLO_NUMBER("ga_crossover_rate", ga.crossover_rate, double),
      WFLO_NUMBER("ga_mutation_rate", ga.mutation_rate, double),
      WFLO_NUMBER("ga_tournament_size", ga.tournament_size, int),
      WFLO_NUMBER("ga_penalty_coefficient", ga.penalty_coefficient, double),
      WFLO_NUMBER("sbo_initial_multiplier", sbo_initial_multiplier, std::size_t),
      WFLO_NUMBER("sbo_max_evaluation_multiplier", sbo_max_evaluation_multiplier, std::size_t),
      WFLO_BOOL("sbo_use_ei", sbo_use_ei),
      WFLO_NUMBER("sbo_ei_threshold", sbo_ei_threshold, double),
      WFLO_BOOL("sbo_ei_raw_scale", sbo_ei_raw_scale),
      WFLO_NUMBER("sbo_duplicate_retries", sbo_duplicate_retries, int),
      Field{"direct_aep_mode",
            [](RunConfig& c, const std::string& v, const std::filesystem::path&) {
              if (v == "traversal") c.direct_aep_mode = AepMode::Traversal;
              else if (v == "pce") c.direct_aep_mode = AepMode::Pce;
              else throw ConfigError(fmt::format("direct_aep_mode: expected traversal or pce, got '{}'", v));
            },
            [](const RunConfig& c) {
              return std::string(c.direct_aep_mode == AepMode::Traversal ? "traversal" : "pce");
            }},
      WFLO_NUMBER("seed", seed, std::uint64_t),
      WFLO_NUMBER("threads", threads, int),
      WFLO_PATH("output_dir", output_dir),
  };
  return table;
}

#undef WFLO_NUMBER
#undef WFLO_BOOL
#undef WFLO_PATH

void validate(const RunConfig& c) {
  if (c.turbine_file.empty()) throw ConfigError("turbine_file is required");
  if (c.wind_rose_file.empty()) throw ConfigError("wind_rose_file is required");
  for (const auto& p : {c.turbine_file, c.wind_rose_file}) {
    if (!std::filesystem::is_regular_file(p)) throw ConfigError(fmt::format("file not found: {}", p.string()));
  }
  if (!(c.rotor_diameter_m > 0.0)) throw ConfigError("rotor_diameter_m must be positive");
  if (!(c.hub_height_m > 0.0)) throw ConfigError("hub_height_m must be positive");
  if (c.grid_nx < 1 || c.grid_ny < 1) throw ConfigError("grid_nx and grid_ny must be at least 1");
  if (c.n_turbines < 1) throw ConfigError("n_turbines must be at least 1");
  if (c.pce_samples < 2) throw ConfigError("pce_samples must be at least 2");
  if (c.pce_max_order < 0) throw ConfigError("pce_max_order must be non-negative");
  if (c.pce_cv_folds < 2) throw ConfigError("pce_cv_folds must be at least 2");
  if (c.kriging.starts < 1 || c.kriging_refit_starts < 1) throw ConfigError("kriging start counts must be at least 1");
  if (!(c.kriging.log10_theta_max > c.kriging.log10_theta_min)) throw ConfigError("kriging theta bounds are empty");
  if (c.sbo_initial_multiplier < 1) throw ConfigError("sbo_initial_multiplier must be at least 1");
  if (c.sbo_max_evaluation_multiplier < c.sbo_initial_multiplier) {
    throw ConfigError("sbo_max_evaluation_multiplier must be at least sbo_initial_multiplier");
  }
  if (c.sbo_duplicate_retries < 0) throw ConfigError("sbo_duplicate_retries must be non-negative");
  if (c.threads < 0) throw ConfigError("threads must be non-negative");
  c.speed.validate();
  c.wake.validate();
  c.ga.validate();
  const FarmGrid grid(c.farm_width_d, c.farm_height_d, c.grid_nx, c.grid_ny, c.rotor_diameter_m);
  const int capacity = greedy_capacity(grid);
  if (capacity < c.n_turbines) {
    throw ConfigError(fmt::format("{} turbines do not fit the {}x{} grid at 2D spacing (capacity {})", c.n_turbines,
                                  c.grid_nx, c.grid_ny, capacity));
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir,
                           const std::string& source_name) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("{}:{}: expected 'key = value'", source_name, line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return key == f.key; });
    if (it == table.end()) throw ConfigError(fmt::format("{}:{}: unknown key '{}'", source_name, line_no, key));
    if (!seen.insert(key).second) throw ConfigError(fmt::format("{}:{}: repeated key '{}'", source_name, line_no, key));
    try {
      it->set(cfg, value, base_dir);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}:{}: {}", source_name, line_no, e.what()));
    }
  }
  // The default output directory is relative too, and resolves like an explicit one.
  if (!seen.count("output_dir")) cfg.output_dir = (base_dir / cfg.output_dir).lexically_normal();
  validate(cfg);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  const auto base = std::filesystem::absolute(path).parent_path();
  RunConfig cfg = parse_run_config(buf.str(), base, path.string());
  if (const char* env = std::getenv("WFLO_OUTPUT_DIR"); env != nullptr && *env != '\0') {
    cfg.output_dir = std::filesystem::absolute(env).lexically_normal();
  }
  return cfg;
}

std::string render_manifest(const RunConfig& cfg) {
  std::string out = "# resolved run configuration\n";
  for (const auto& f : fields()) out += fmt::format("{} = {}\n", f.key, f.get(cfg));
  return out;
}

FarmProblem make_problem(const RunConfig& cfg) {
  const TurbineSpec turbine = load_turbine(cfg.turbine_file, cfg.rotor_diameter_m, cfg.hub_height_m);
  return FarmProblem{FarmGrid(cfg.farm_width_d, cfg.farm_height_d, cfg.grid_nx, cfg.grid_ny, cfg.rotor_diameter_m),
                     cfg.n_turbines,
                     turbine,
                     cfg.wake,
                     load_wind_rose(cfg.wind_rose_file, cfg.speed),
                     cfg.threads};
}

SboConfig make_sbo_config(const RunConfig& cfg) {
  SboConfig s;
  const std::size_t d = 2 * static_cast<std::size_t>(cfg.n_turbines);
  s.initial_samples = cfg.sbo_initial_multiplier * d;
  s.max_evaluations = cfg.sbo_max_evaluation_multiplier * d;
  s.pce_samples = cfg.pce_samples;
  s.pce = PceOptions{cfg.pce_max_order, cfg.pce_cv_folds, cfg.threads};
  s.use_ei = cfg.sbo_use_ei;
  s.ei_threshold = cfg.sbo_ei_threshold;
  s.ei_raw_scale = cfg.sbo_ei_raw_scale;
  s.duplicate_retries = cfg.sbo_duplicate_retries;
  s.ga = cfg.ga;
  s.kriging = cfg.kriging;
  s.refit_starts = cfg.kriging_refit_starts;
  s.seed = cfg.seed;
  return s;
}

DirectConfig make_direct_config(const RunConfig& cfg) {
  DirectConfig d;
  d.ga = cfg.ga;
  d.ga.seed = derive_seed(cfg.seed, 6, 0);
  d.mode = cfg.direct_aep_mode;
  d.pce_samples = cfg.pce_samples;
  d.pce = PceOptions{cfg.pce_max_order, cfg.pce_cv_folds, cfg.threads};
  return d;
}

}  // namespace wflo
