#include <algorithm>
#include <limits>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "wflo/errors.hpp"
#include "wflo/log.hpp"
#include "wflo/optimizer.hpp"

namespace wflo {
namespace {

// Sub-seed streams drawn from the master seed.
constexpr std::uint64_t kStreamLhs = 1;
constexpr std::uint64_t kStreamPce = 2;
constexpr std::uint64_t kStreamGa = 3;
constexpr std::uint64_t kStreamKriging = 4;
constexpr std::uint64_t kStreamPerturb = 5;

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class SboDriver {
 public:
  SboDriver(const FarmProblem& problem, const SboConfig& cfg)
      : p_(problem),
        cfg_(cfg),
        dim_(2 * static_cast<std::size_t>(problem.n_turbines)),
        bases_(wind_rose_bases(problem.rose, cfg.pce.max_order)) {
    cfg_.ga.validate();
    if (cfg_.initial_samples == 0) cfg_.initial_samples = 5 * dim_;
    if (cfg_.max_evaluations == 0) cfg_.max_evaluations = 50 * dim_;
    if (cfg_.pce_samples < 2) throw ConfigError("PCE sample count must be at least 2");
    if (cfg_.initial_samples < 2) throw ConfigError("SBO needs at least two initial layouts");
    if (cfg_.max_evaluations < cfg_.initial_samples) {
      throw ConfigError(fmt::format("evaluation cap {} is below the initial sample size {}", cfg_.max_evaluations,
                                    cfg_.initial_samples));
    }
    cfg_.pce.threads = problem.threads;
    state_.seed = cfg_.seed;
  }

  SboResult run() {
    const auto initial = lhs_initial_layouts(p_.grid, p_.n_turbines, cfg_.initial_samples,
                                             derive_seed(cfg_.seed, kStreamLhs, 0));
    state_.audit.push_back(fmt::format("initial: {} LHS layouts, d = {}", initial.size(), dim_));
    for (const auto& layout : initial) add(layout, SboPhase::Initial);

    state_.phase = SboPhase::Msp;
    SboReport report;
    while (true) {
      if (state_.archive.size() >= cfg_.max_evaluations) {
        state_.audit.push_back(fmt::format("stop: evaluation cap {} reached", cfg_.max_evaluations));
        report.converged = false;
        break;
      }
      refit();
      const std::uint64_t ga_seed = derive_seed(cfg_.seed, kStreamGa, state_.iteration);
      ++state_.iteration;

      if (state_.phase == SboPhase::Msp) {
        const GaResult ga = propose([this](const Eigen::VectorXd& x) { return state_.model.predict(x).mean; },
                                    ga_seed);
        const LayoutKey key = canonical_key(ga.best.vertices);
        if (const auto it = state_.index.find(key); it != state_.index.end()) {
          state_.msp_converged_at = state_.archive.size();
          state_.msp_best_aep_wh = best_aep();
          state_.audit.push_back(fmt::format(
              "iteration {}: MSP proposal duplicates archive entry {} ({}); MSP converged at {} evaluations",
              state_.iteration, it->second, fmt::join(key, " "), state_.archive.size()));
          if (!cfg_.use_ei) {
            report.converged = true;
            break;
          }
          state_.phase = SboPhase::Ei;
          state_.audit.push_back(fmt::format("iteration {}: switching to EI phase", state_.iteration));
          continue;
        }
        state_.audit.push_back(fmt::format("iteration {}: MSP infill, predicted {:.6g}", state_.iteration,
                                           state_.model.destandardize(ga.best_score)));
        add(ga.best, SboPhase::Msp);
        continue;
      }

      const double f_best = state_.model.best_response();
      const GaResult ga = propose(
          [this, f_best](const Eigen::VectorXd& x) { return expected_improvement(state_.model, x, f_best); },
          ga_seed);
      const double max_ei = ga.best_score;
      report.final_max_ei = max_ei;
      const double scale = cfg_.ei_raw_scale ? state_.model.response_sd() : 1.0;
      if (max_ei * scale < cfg_.ei_threshold) {
        state_.audit.push_back(fmt::format("iteration {}: max EI {:.6g} below threshold {}; converged",
                                           state_.iteration, max_ei * scale, cfg_.ei_threshold));
        report.converged = true;
        break;
      }
      std::optional<Layout> candidate = fresh_candidate(ga.best);
      if (!candidate) {
        state_.audit.push_back(fmt::format(
            "iteration {}: EI proposal and {} perturbations already archived; converged", state_.iteration,
            cfg_.duplicate_retries));
        report.converged = true;
        break;
      }
      state_.audit.push_back(fmt::format("iteration {}: EI infill, max EI {:.6g}", state_.iteration, max_ei));
      add(*candidate, SboPhase::Ei);
    }

    state_.phase = SboPhase::Done;
    report.true_evaluations = state_.archive.size();
    report.function_calls = state_.archive.size() * cfg_.pce_samples;
    report.best_aep_wh = best_aep();

    SboResult result;
    result.best = state_.archive[state_.best_index].layout;
    result.history = std::move(history_);
    result.report = report;
    result.state = std::move(state_);
    return result;
  }

 private:
  double best_aep() const { return state_.archive[state_.best_index].aep_wh; }

  void add(const Layout& layout, SboPhase phase) {
    if (!layout_valid(layout, p_.grid)) throw std::logic_error("SBO produced an invalid layout");
    const std::size_t id = state_.archive.size();
    const std::uint64_t seed = derive_seed(cfg_.seed, kStreamPce, id);
    const auto aep = estimate_aep(layout, p_.rose, bases_, cfg_.pce_samples, seed, p_.turbine, p_.wake, cfg_.pce);
    LayoutKey key = canonical_key(layout.vertices);
    state_.archive.push_back({Layout::from_vertices(p_.grid, key), aep.aep_wh, seed, phase});
    state_.index.emplace(std::move(key), id);
    if (id == 0 || aep.aep_wh > best_aep()) state_.best_index = id;
    state_.best_so_far.push_back(best_aep());
    history_.push_back({id + 1, to_string(phase), aep.aep_wh, best_aep(), (id + 1) * cfg_.pce_samples});
  }

  void refit() {
    const auto n = static_cast<Eigen::Index>(state_.archive.size());
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(dim_));
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& e = state_.archive[static_cast<std::size_t>(i)];
      x.row(i) = layout_vector(e.layout, p_.grid).transpose();
      y(i) = e.aep_wh;
    }
    KrigingOptions opts = cfg_.kriging;
    opts.seed = derive_seed(cfg_.seed, kStreamKriging, static_cast<std::uint64_t>(state_.kriging_fits));
    if (state_.kriging_fits > 0 && state_.model.theta().size() == static_cast<Eigen::Index>(dim_)) {
      // Later fits start from the previous optimum plus a few fresh starts.
      opts.warm_start = state_.model.theta().array().log().matrix();
      opts.starts = std::min(opts.starts, cfg_.refit_starts);
    }
    state_.model = fit_kriging(x, y, opts);
    ++state_.kriging_fits;
  }

  GaResult propose(const std::function<double(const Eigen::VectorXd&)>& acquisition, std::uint64_t seed) {
    GaConfig ga = cfg_.ga;
    ga.seed = seed;
    const std::vector<Chromosome> seeds{state_.archive[state_.best_index].layout.vertices};
    GaResult r = ga_run([&](const Layout& l) { return acquisition(layout_vector(l, p_.grid)); }, p_.grid,
                        p_.n_turbines, ga, seeds);
    if (!r.found_feasible) throw std::logic_error("surrogate GA found no feasible layout");
    return r;
  }

  // The proposal itself when new, else up to `duplicate_retries` one-gene
  // mutations of it that are feasible and not yet archived.
  std::optional<Layout> fresh_candidate(const Layout& proposal) {
    if (!state_.index.contains(canonical_key(proposal.vertices))) return proposal;
    std::mt19937_64 rng(derive_seed(cfg_.seed, kStreamPerturb, state_.iteration));
    std::uniform_int_distribution<std::size_t> gene(0, proposal.vertices.size() - 1);
    std::uniform_int_distribution<int> vertex(0, p_.grid.vertex_count() - 1);
    for (int attempt = 0; attempt < cfg_.duplicate_retries; ++attempt) {
      Chromosome genes = proposal.vertices;
      int v = vertex(rng);
      while (std::find(genes.begin(), genes.end(), v) != genes.end()) v = vertex(rng);
      genes[gene(rng)] = v;
      repair_spacing(genes, p_.grid, rng);
      const Layout candidate = Layout::from_vertices(p_.grid, canonical_key(genes));
      if (!layout_valid(candidate, p_.grid)) continue;
      if (state_.index.contains(candidate.vertices)) continue;
      state_.audit.push_back(fmt::format("iteration {}: EI proposal already archived; perturbation {} accepted",
                                         state_.iteration, attempt + 1));
      return candidate;
    }
    return std::nullopt;
  }

  const FarmProblem& p_;
  SboConfig cfg_;
  std::size_t dim_;
  WindRoseBases bases_;
  SboState state_;
  std::vector<HistoryRow> history_;
};

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  return splitmix(splitmix(splitmix(master) ^ stream) ^ index);
}

std::string to_string(SboPhase phase) {
  switch (phase) {
    case SboPhase::Initial: return "init";
    case SboPhase::Msp: return "msp";
    case SboPhase::Ei: return "ei";
    case SboPhase::Done: return "done";
  }
  return "unknown";
}

SboResult sbo_run(const FarmProblem& problem, const SboConfig& cfg) {
  return SboDriver(problem, cfg).run();
}

DirectResult direct_optimize(const FarmProblem& problem, const DirectConfig& cfg) {
  std::optional<WindRoseBases> bases;
  PceOptions pce = cfg.pce;
  pce.threads = problem.threads;
  if (cfg.mode == AepMode::Pce) bases = wind_rose_bases(problem.rose, pce.max_order);

  DirectResult result;
  auto objective = [&](const Layout& layout) {
    double aep = 0.0;
    if (cfg.mode == AepMode::Traversal) {
      const auto r = baseline_aep(layout, problem.rose, problem.turbine, problem.wake, problem.threads);
      aep = r.aep_wh;
      result.farm_power_calls += r.farm_power_calls;
    } else {
      const auto seed = derive_seed(cfg.ga.seed, kStreamPce, result.evaluations);
      const auto r = estimate_aep(layout, problem.rose, *bases, cfg.pce_samples, seed, problem.turbine,
                                  problem.wake, pce);
      aep = r.aep_wh;
      result.farm_power_calls += r.farm_power_calls;
    }
    ++result.evaluations;
    const double best = result.history.empty() ? aep : std::max(aep, result.history.back().best_aep_wh);
    result.history.push_back({result.evaluations, "direct", aep, best, result.farm_power_calls});
    return aep;
  };

  const GaResult ga = ga_run(objective, problem.grid, problem.n_turbines, cfg.ga);
  if (!ga.found_feasible) throw ConfigError("direct GA found no feasible layout");
  result.best = ga.best;
  result.best_aep_wh = ga.best_score;
  result.generations = ga.generations;
  for (const auto& e : ga.evaluations) result.archive.emplace_back(Layout::from_vertices(problem.grid, e.key), e.score);
  return result;
}

}  // namespace wflo
