#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>

#include <fmt/format.h>

#include "wflo/errors.hpp"
#include "wflo/optimizer.hpp"

namespace wflo {
namespace {

// Pairwise vertex conflicts (closer than the minimum spacing) for one grid.
class ConflictTable {
 public:
  explicit ConflictTable(const FarmGrid& grid) : n_(grid.vertex_count()), shortfall_(static_cast<std::size_t>(n_ * n_), 0.0) {
    const double d0 = grid.rotor_diameter_m();
    const double min_sep = kMinSpacingDiameters * d0;
    for (int a = 0; a < n_; ++a) {
      const Point pa = grid.vertex(a);
      for (int b = 0; b < n_; ++b) {
        if (a == b) continue;
        const Point pb = grid.vertex(b);
        const double dist = std::hypot(pa.x - pb.x, pa.y - pb.y);
        if (dist < min_sep * (1.0 - 1e-9)) shortfall_[idx(a, b)] = (min_sep - dist) / d0;
      }
    }
  }

  bool conflict(int a, int b) const { return shortfall_[idx(a, b)] > 0.0; }
  double shortfall(int a, int b) const { return shortfall_[idx(a, b)]; }

  bool conflicts_with_any(int v, const Chromosome& genes, std::size_t skip) const {
    for (std::size_t j = 0; j < genes.size(); ++j) {
      if (j != skip && (genes[j] == v || conflict(v, genes[j]))) return true;
    }
    return false;
  }

  double violation(const Chromosome& genes) const {
    double total = 0.0;
    for (std::size_t i = 0; i < genes.size(); ++i) {
      for (std::size_t j = i + 1; j < genes.size(); ++j) total += shortfall(genes[i], genes[j]);
    }
    return total;
  }

 private:
  std::size_t idx(int a, int b) const { return static_cast<std::size_t>(a) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(b); }
  int n_;
  std::vector<double> shortfall_;
};

// -1 when every vertex is taken.
int random_free_vertex(const Chromosome& genes, int vertex_count, std::mt19937_64& rng) {
  std::vector<char> taken(static_cast<std::size_t>(vertex_count), 0);
  for (int g : genes) taken[static_cast<std::size_t>(g)] = 1;
  std::vector<int> free;
  for (int v = 0; v < vertex_count; ++v) {
    if (!taken[static_cast<std::size_t>(v)]) free.push_back(v);
  }
  if (free.empty()) return -1;
  return free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
}

int repair_with(Chromosome& genes, const FarmGrid& grid, const ConflictTable& table, std::mt19937_64& rng) {
  int remaining = 0;
  for (std::size_t i = 0; i < genes.size(); ++i) {
    if (!table.conflicts_with_any(genes[i], genes, i)) continue;
    const int cx = grid.column(genes[i]);
    const int cy = grid.row(genes[i]);
    std::vector<int> candidates;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int x = cx + dx;
        const int y = cy + dy;
        if (x < 0 || y < 0 || x >= grid.nx() || y >= grid.ny()) continue;
        const int v = grid.index(x, y);
        if (!table.conflicts_with_any(v, genes, i)) candidates.push_back(v);
      }
    }
    if (candidates.empty()) {
      ++remaining;
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    genes[i] = candidates[pick(rng)];
  }
  return remaining;
}

struct Individual {
  Chromosome genes;
  bool feasible = false;
  double score = 0.0;      // objective value when feasible
  double violation = 0.0;  // spacing shortfall when infeasible
  double fitness = 0.0;
};

}  // namespace

bool spacing_feasible(const Layout& layout, double rotor_diameter_m) {
  const double min_sep = kMinSpacingDiameters * rotor_diameter_m;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    for (std::size_t j = i + 1; j < layout.size(); ++j) {
      const double dist = std::hypot(layout.positions[i].x - layout.positions[j].x,
                                     layout.positions[i].y - layout.positions[j].y);
      if (dist < min_sep * (1.0 - 1e-9)) return false;
    }
  }
  return true;
}

bool spacing_feasible(const Layout& layout, const TurbineSpec& spec) {
  return spacing_feasible(layout, spec.rotor_diameter_m);
}

bool layout_valid(const Layout& layout, const FarmGrid& grid) {
  for (const Point& p : layout.positions) {
    if (!grid.contains(p)) return false;
  }
  if (!layout.vertices.empty()) {
    if (layout.vertices.size() != layout.positions.size()) return false;
    std::set<int> seen;
    for (int v : layout.vertices) {
      if (v < 0 || v >= grid.vertex_count() || !seen.insert(v).second) return false;
    }
  }
  return spacing_feasible(layout, grid.rotor_diameter_m());
}

LayoutKey canonical_key(std::span<const int> vertices) {
  LayoutKey key(vertices.begin(), vertices.end());
  std::sort(key.begin(), key.end());
  return key;
}

Eigen::VectorXd layout_vector(const Layout& layout, const FarmGrid& grid) {
  std::vector<Point> pts = layout.positions;
  std::sort(pts.begin(), pts.end(), [](Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  Eigen::VectorXd v(2 * static_cast<Eigen::Index>(pts.size()));
  const double w = grid.width_m() > 0.0 ? grid.width_m() : 1.0;
  const double h = grid.height_m() > 0.0 ? grid.height_m() : 1.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    v(2 * static_cast<Eigen::Index>(i)) = pts[i].x / w;
    v(2 * static_cast<Eigen::Index>(i) + 1) = pts[i].y / h;
  }
  return v;
}

int greedy_capacity(const FarmGrid& grid) {
  const ConflictTable table(grid);
  Chromosome placed;
  for (int v = 0; v < grid.vertex_count(); ++v) {
    if (!table.conflicts_with_any(v, placed, placed.size())) placed.push_back(v);
  }
  return static_cast<int>(placed.size());
}

void GaConfig::validate() const {
  if (population_size < 2) throw ConfigError("GA population must be at least 2");
  if (max_generations < 0) throw ConfigError("GA generation cap must be non-negative");
  if (crossover_rate < 0.0 || crossover_rate > 1.0) throw ConfigError("crossover rate outside [0,1]");
  if (mutation_rate < 0.0 || mutation_rate > 1.0) throw ConfigError("mutation rate outside [0,1]");
  if (tournament_size < 1) throw ConfigError("tournament size must be at least 1");
  if (penalty_coefficient < 0.0) throw ConfigError("penalty coefficient must be non-negative");
}

int repair_spacing(Chromosome& genes, const FarmGrid& grid, std::mt19937_64& rng) {
  const ConflictTable table(grid);
  return repair_with(genes, grid, table, rng);
}

GaResult ga_run(const LayoutObjective& objective, const FarmGrid& grid, int n_turbines,
                const GaConfig& cfg, const std::vector<Chromosome>& seeds) {
  cfg.validate();
  if (n_turbines < 1 || n_turbines > grid.vertex_count()) {
    throw ConfigError(fmt::format("cannot place {} turbines on {} vertices", n_turbines, grid.vertex_count()));
  }
  const ConflictTable table(grid);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto n = static_cast<std::size_t>(n_turbines);
  const int nv = grid.vertex_count();

  GaResult result;
  std::map<LayoutKey, double> cache;

  auto evaluate = [&](Individual& ind) {
    ind.violation = table.violation(ind.genes);
    ind.feasible = ind.violation == 0.0;
    if (!ind.feasible) return;
    LayoutKey key = canonical_key(ind.genes);
    auto it = cache.find(key);
    if (it == cache.end()) {
      const double s = objective(Layout::from_vertices(grid, key));
      it = cache.emplace(key, s).first;
      result.evaluations.push_back({std::move(key), s});
    }
    ind.score = it->second;
  };

  auto assign_fitness = [&](std::vector<Individual>& pop) {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& ind : pop) {
      if (ind.feasible) worst = std::min(worst, ind.score);
    }
    if (!std::isfinite(worst)) worst = 0.0;
    for (auto& ind : pop) {
      ind.fitness = ind.feasible ? ind.score : worst - cfg.penalty_coefficient * ind.violation - 1e-12 * std::abs(worst);
    }
  };

  auto better = [](const Individual& a, const Individual& b) {
    if (a.feasible != b.feasible) return a.feasible;
    return a.fitness > b.fitness;
  };

  auto tournament = [&](const std::vector<Individual>& pop) -> const Individual& {
    std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
    std::size_t best = pick(rng);
    for (int t = 1; t < cfg.tournament_size; ++t) {
      const std::size_t c = pick(rng);
      if (better(pop[c], pop[best])) best = c;
    }
    return pop[best];
  };

  auto dedupe = [&](Chromosome& child, const Chromosome& donor) {
    std::vector<int> used;
    for (std::size_t i = 0; i < child.size(); ++i) {
      if (std::find(used.begin(), used.end(), child[i]) != used.end()) {
        int replacement = -1;
        for (int g : donor) {
          if (std::find(child.begin(), child.end(), g) == child.end()) {
            replacement = g;
            break;
          }
        }
        child[i] = replacement >= 0 ? replacement : random_free_vertex(child, nv, rng);
      }
      used.push_back(child[i]);
    }
  };

  auto mutate = [&](Chromosome& genes) {
    for (auto& g : genes) {
      if (unit(rng) < cfg.mutation_rate) {
        if (const int v = random_free_vertex(genes, nv, rng); v >= 0) g = v;
      }
    }
  };

  std::vector<Individual> pop;
  pop.reserve(static_cast<std::size_t>(cfg.population_size));
  for (const auto& s : seeds) {
    if (static_cast<int>(pop.size()) >= cfg.population_size) break;
    if (s.size() != n) throw DomainError("seed chromosome has the wrong length");
    pop.push_back({s});
  }
  while (static_cast<int>(pop.size()) < cfg.population_size) {
    std::vector<int> all(static_cast<std::size_t>(nv));
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    Individual ind;
    ind.genes.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
    repair_with(ind.genes, grid, table, rng);
    pop.push_back(std::move(ind));
  }
  for (auto& ind : pop) evaluate(ind);
  assign_fitness(pop);

  Individual best;
  bool have_best = false;
  auto track_best = [&]() {
    bool improved = false;
    for (const auto& ind : pop) {
      if (ind.feasible && (!have_best || ind.score > best.score)) {
        best = ind;
        have_best = true;
        improved = true;
      }
    }
    return improved;
  };
  track_best();
  int stall = 0;

  for (int gen = 0; gen < cfg.max_generations; ++gen) {
    std::vector<Individual> next;
    next.reserve(pop.size());
    const auto elite = std::min_element(pop.begin(), pop.end(), better);
    next.push_back(*elite);
    while (next.size() < pop.size()) {
      Chromosome c1 = tournament(pop).genes;
      Chromosome c2 = tournament(pop).genes;
      if (unit(rng) < cfg.crossover_rate) {
        const Chromosome p1 = c1;
        const Chromosome p2 = c2;
        for (std::size_t i = 0; i < n; ++i) {
          if (unit(rng) < 0.5) std::swap(c1[i], c2[i]);
        }
        dedupe(c1, p2);
        dedupe(c2, p1);
      }
      for (Chromosome* c : {&c1, &c2}) {
        if (next.size() >= pop.size()) break;
        mutate(*c);
        repair_with(*c, grid, table, rng);
        Individual child;
        child.genes = std::move(*c);
        evaluate(child);
        next.push_back(std::move(child));
      }
    }
    pop = std::move(next);
    assign_fitness(pop);
    const bool improved = track_best();
    result.generation_best.push_back(have_best ? best.score : std::numeric_limits<double>::quiet_NaN());
    result.generations = gen + 1;
    stall = improved ? 0 : stall + 1;
    if (cfg.stall_generations > 0 && stall >= cfg.stall_generations) {
      result.stalled = true;
      break;
    }
  }

  result.found_feasible = have_best;
  if (have_best) {
    result.best = Layout::from_vertices(grid, canonical_key(best.genes));
    result.best_score = best.score;
  }
  return result;
}

std::vector<Layout> lhs_initial_layouts(const FarmGrid& grid, int n_turbines, std::size_t n_samples,
                                        std::uint64_t seed) {
  if (n_turbines < 1) throw ConfigError("need at least one turbine");
  if (greedy_capacity(grid) < n_turbines) {
    throw ConfigError(fmt::format("{} turbines do not fit on a {}x{} grid with {} D spacing", n_turbines,
                                  grid.nx(), grid.ny(), kMinSpacingDiameters));
  }
  const ConflictTable table(grid);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto n = static_cast<std::size_t>(n_turbines);
  const std::size_t dims = 2 * n;

  // strata[k][s]: stratified coordinate of sample s along dimension k.
  std::vector<std::vector<double>> strata(dims, std::vector<double>(n_samples));
  for (auto& col : strata) {
    for (std::size_t s = 0; s < n_samples; ++s) {
      col[s] = (static_cast<double>(s) + unit(rng)) / static_cast<double>(n_samples);
    }
    std::shuffle(col.begin(), col.end(), rng);
  }

  // Places each turbine on the closest vertex that is unoccupied and spacing-feasible.
  auto place = [&](const std::vector<Point>& targets) -> std::optional<Chromosome> {
    Chromosome genes;
    for (const Point& t : targets) {
      int best_v = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int v = 0; v < grid.vertex_count(); ++v) {
        if (table.conflicts_with_any(v, genes, genes.size())) continue;
        const Point p = grid.vertex(v);
        const double d = std::hypot(p.x - t.x, p.y - t.y);
        if (d < best_d) {
          best_d = d;
          best_v = v;
        }
      }
      if (best_v < 0) return std::nullopt;
      genes.push_back(best_v);
    }
    return genes;
  };

  std::vector<Layout> out;
  std::set<LayoutKey> seen;
  for (std::size_t s = 0; s < n_samples; ++s) {
    std::vector<Point> targets(n);
    for (std::size_t t = 0; t < n; ++t) {
      targets[t] = {strata[2 * t][s] * grid.width_m(), strata[2 * t + 1][s] * grid.height_m()};
    }
    std::optional<Chromosome> genes;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      genes = place(targets);
      if (genes && !seen.contains(canonical_key(*genes))) break;
      // Dead end or duplicate: jitter the targets and retry in a shuffled order.
      genes.reset();
      for (auto& t : targets) t = {unit(rng) * grid.width_m(), unit(rng) * grid.height_m()};
    }
    if (!genes) throw ConfigError("could not generate enough distinct feasible initial layouts");
    LayoutKey key = canonical_key(*genes);
    seen.insert(key);
    out.push_back(Layout::from_vertices(grid, key));
  }
  return out;
}

}  // namespace wflo
