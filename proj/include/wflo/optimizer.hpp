#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wflo/farm_model.hpp"
#include "wflo/kriging.hpp"
#include "wflo/pce.hpp"
#include "wflo/wind_resource.hpp"

namespace wflo {

inline constexpr double kMinSpacingDiameters = 2.0;

/// True iff every pair of turbines is at least two rotor diameters apart
/// (boundary inclusive, with a 1e-9 relative allowance for rounding).
bool spacing_feasible(const Layout& layout, const TurbineSpec& spec);
bool spacing_feasible(const Layout& layout, double rotor_diameter_m);

/// Boundary, vertex uniqueness and spacing together.
bool layout_valid(const Layout& layout, const FarmGrid& grid);

/// Sorted vertex list; identical farms share one key regardless of turbine order.
using LayoutKey = std::vector<int>;
LayoutKey canonical_key(std::span<const int> vertices);

/// Positions sorted by (x, then y), flattened to [x0, y0, x1, y1, ...] and
/// scaled to [0, 1] by the farm extent.
Eigen::VectorXd layout_vector(const Layout& layout, const FarmGrid& grid);

/// Largest turbine count a greedy row-major packing fits on the grid.
int greedy_capacity(const FarmGrid& grid);

struct GaConfig {
  int population_size = 100;
  int max_generations = 200;
  /// Stop after this many generations without a better feasible individual.
  int stall_generations = 30;
  double crossover_rate = 0.9;
  double mutation_rate = 0.05;
  int tournament_size = 2;
  std::uint64_t seed = 1;
  /// Infeasible individuals score (worst feasible score) - penalty * violation,
  /// where violation sums the per-pair spacing shortfall in rotor diameters.
  double penalty_coefficient = 1.0;

  void validate() const;
};

using Chromosome = std::vector<int>;
using LayoutObjective = std::function<double(const Layout&)>;

struct GaEvaluation {
  LayoutKey key;
  double score = 0.0;
};

struct GaResult {
  Layout best;
  double best_score = 0.0;
  bool found_feasible = false;
  std::vector<double> generation_best;   // best feasible score after each generation
  std::vector<GaEvaluation> evaluations;  // distinct feasible layouts, in evaluation order
  int generations = 0;
  bool stalled = false;
};

/// Moves spacing violators to a free vertex within one grid step when that
/// removes their conflicts. Returns the number of turbines still violating.
int repair_spacing(Chromosome& genes, const FarmGrid& grid, std::mt19937_64& rng);

/// Discrete-grid genetic algorithm: tournament selection, vertex-swap
/// crossover with uniqueness repair, per-gene mutation to random free
/// vertices, spacing repair then penalty, one elite. The objective is only
/// called on feasible layouts and each distinct layout is evaluated once.
GaResult ga_run(const LayoutObjective& objective, const FarmGrid& grid, int n_turbines,
                const GaConfig& cfg, const std::vector<Chromosome>& seeds = {});

/// Latin hypercube over the 2N turbine coordinates, snapped to the nearest
/// unoccupied vertex and spacing-repaired. Layouts are distinct.
std::vector<Layout> lhs_initial_layouts(const FarmGrid& grid, int n_turbines, std::size_t n_samples,
                                        std::uint64_t seed);

enum class AepMode { Traversal, Pce };

struct FarmProblem {
  FarmGrid grid;
  int n_turbines = 8;
  TurbineSpec turbine;
  WakeParams wake;
  WindRose rose;
  int threads = 1;
};

struct HistoryRow {
  std::size_t iteration = 0;
  std::string phase;
  double aep_wh = 0.0;
  double best_aep_wh = 0.0;
  std::size_t function_calls_cum = 0;
};

struct DirectConfig {
  GaConfig ga;
  AepMode mode = AepMode::Traversal;
  std::size_t pce_samples = 50;
  PceOptions pce;
};

struct DirectResult {
  Layout best;
  double best_aep_wh = 0.0;
  std::size_t evaluations = 0;      // distinct layouts evaluated ("iterations")
  std::size_t farm_power_calls = 0;
  int generations = 0;
  std::vector<HistoryRow> history;
  std::vector<std::pair<Layout, double>> archive;
};

/// GA on the true AEP (traversal or PCE). Calls = evaluations x cells per AEP.
DirectResult direct_optimize(const FarmProblem& problem, const DirectConfig& cfg);

enum class SboPhase { Initial, Msp, Ei, Done };
std::string to_string(SboPhase phase);

struct SboConfig {
  std::size_t initial_samples = 0;  // 0: 5 x dimension
  std::size_t pce_samples = 50;
  PceOptions pce;
  bool use_ei = true;
  double ei_threshold = 0.1;
  /// Compare max EI against the threshold on the raw AEP scale (Wh) instead of standardized units.
  bool ei_raw_scale = false;
  std::size_t max_evaluations = 0;  // 0: 50 x dimension
  int duplicate_retries = 10;
  GaConfig ga;
  KrigingOptions kriging;
  /// Multi-start count for refits after the first (which also warm-start from the previous theta).
  int refit_starts = 2;
  std::uint64_t seed = 1;
};

struct ArchiveEntry {
  Layout layout;  // vertices in canonical order
  double aep_wh = 0.0;
  std::uint64_t pce_seed = 0;
  SboPhase phase = SboPhase::Initial;
};

struct SboState {
  std::vector<ArchiveEntry> archive;
  std::map<LayoutKey, std::size_t> index;
  KrigingModel model;
  SboPhase phase = SboPhase::Initial;
  std::size_t iteration = 0;  // surrogate optimization cycles completed
  std::size_t best_index = 0;
  std::vector<double> best_so_far;  // after each archive insertion
  std::uint64_t seed = 0;
  std::vector<std::string> audit;
  /// Archive size and best AEP when the MSP phase converged (0 if it never did).
  std::size_t msp_converged_at = 0;
  double msp_best_aep_wh = 0.0;
  int kriging_fits = 0;
};

struct SboReport {
  bool converged = false;
  std::size_t true_evaluations = 0;
  std::size_t function_calls = 0;  // true evaluations x PCE sample size
  double final_max_ei = 0.0;
  double best_aep_wh = 0.0;
};

struct SboResult {
  Layout best;
  SboState state;
  SboReport report;
  std::vector<HistoryRow> history;
};

/// Adaptive surrogate loop: LHS archive -> PCE AEP -> Kriging -> GA on the
/// predicted mean until a proposal repeats, then GA on expected improvement
/// until its maximum drops below the threshold or the evaluation cap is hit.
SboResult sbo_run(const FarmProblem& problem, const SboConfig& cfg);

/// Deterministic 64-bit mixer used to derive sub-seeds from a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

}  // namespace wflo
