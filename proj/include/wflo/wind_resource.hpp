#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "wflo/farm_model.hpp"

namespace wflo {

enum class SpeedMode { Weibull, Constant };

/// Wind speed marginal: a Weibull truncated to [lower_ms, upper_ms] (mass
/// renormalized, not lumped), discretized into bins of `bin_width_ms` for
/// traversal. Constant mode collapses the axis to one speed.
struct SpeedDistribution {
  SpeedMode mode = SpeedMode::Weibull;
  double shape = 2.0;
  double scale = 8.0;
  double lower_ms = 3.0;
  double upper_ms = 25.0;
  double bin_width_ms = 1.0;
  double constant_ms = 8.0;

  void validate() const;
  /// Untruncated Weibull CDF.
  double cdf(double u) const;
  /// Inverse of the truncated CDF, p in [0, 1].
  double quantile(double p) const;
};

/// Direction histogram times an independent speed marginal.
class WindRose {
 public:
  /// `centers` must be evenly spaced and cover the full circle.
  WindRose(std::vector<double> centers, std::vector<double> frequencies, SpeedDistribution speed);

  std::size_t direction_count() const { return centers_.size(); }
  std::size_t speed_count() const { return speed_values_.size(); }
  std::size_t cell_count() const { return direction_count() * speed_count(); }

  const std::vector<double>& direction_centers() const { return centers_; }
  const std::vector<double>& direction_frequencies() const { return frequencies_; }
  const std::vector<double>& speed_values() const { return speed_values_; }
  const std::vector<double>& speed_probabilities() const { return speed_probs_; }
  const SpeedDistribution& speed() const { return speed_; }

  double direction_width() const { return width_; }
  /// Directions live on [direction_lower(), direction_lower() + 360).
  double direction_lower() const { return centers_.front() - 0.5 * width_; }
  /// Maps a compass bearing onto the unwrapped direction interval.
  double direction_coordinate(double direction_deg) const;

  /// Inverse CDF of the piecewise-uniform direction histogram; unwrapped.
  double direction_quantile(double p) const;
  double speed_quantile(double p) const;

 private:
  std::vector<double> centers_;
  std::vector<double> frequencies_;
  std::vector<double> cumulative_;
  double width_ = 0.0;
  SpeedDistribution speed_;
  std::vector<double> speed_values_;
  std::vector<double> speed_probs_;
};

/// Reads `direction_deg,frequency`; frequencies are renormalized to sum 1.
WindRose load_wind_rose(const std::filesystem::path& path, const SpeedDistribution& speed);

struct ConditionSample {
  std::vector<WindCondition> conditions;
  std::uint64_t seed = 0;
};

/// Latin hypercube sample: one point per stratum of each marginal, pushed
/// through the inverse CDFs, with the two axes independently permuted.
ConditionSample sample_conditions(const WindRose& rose, std::size_t n, std::uint64_t seed);

struct AepResult {
  double aep_wh = 0.0;
  std::size_t farm_power_calls = 0;
};

inline constexpr double kHoursPerYear = 8760.0;

/// Exhaustive traversal of every direction x speed cell.
AepResult baseline_aep(const Layout& layout, const WindRose& rose, const TurbineSpec& spec,
                       const WakeParams& wp, int threads = 1);

}  // namespace wflo
