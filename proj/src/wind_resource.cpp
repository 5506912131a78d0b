#include "wflo/wind_resource.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "wflo/csv.hpp"
#include "wflo/errors.hpp"
#include "wflo/parallel.hpp"

namespace wflo {

void SpeedDistribution::validate() const {
  if (mode == SpeedMode::Constant) {
    if (!(constant_ms >= 0.0)) throw DomainError("constant speed must be non-negative");
    return;
  }
  if (!(shape > 0.0 && scale > 0.0)) throw DomainError("Weibull shape and scale must be positive");
  if (!(lower_ms >= 0.0 && lower_ms < upper_ms)) throw DomainError("require 0 <= lower < upper speed");
  if (!(bin_width_ms > 0.0)) throw DomainError("speed bin width must be positive");
  const double bins = (upper_ms - lower_ms) / bin_width_ms;
  if (std::abs(bins - std::round(bins)) > 1e-9) {
    throw DomainError("speed bin width must divide [lower, upper]");
  }
  if (!(cdf(upper_ms) - cdf(lower_ms) > 0.0)) throw DomainError("truncated Weibull has no mass");
}

double SpeedDistribution::cdf(double u) const {
  if (u <= 0.0) return 0.0;
  return -std::expm1(-std::pow(u / scale, shape));
}

double SpeedDistribution::quantile(double p) const {
  if (mode == SpeedMode::Constant) return constant_ms;
  p = std::clamp(p, 0.0, 1.0);
  const double lo = cdf(lower_ms);
  const double hi = cdf(upper_ms);
  const double q = lo + p * (hi - lo);
  const double u = scale * std::pow(-std::log1p(-q), 1.0 / shape);
  return std::clamp(u, lower_ms, upper_ms);
}

WindRose::WindRose(std::vector<double> centers, std::vector<double> frequencies,
                   SpeedDistribution speed)
    : centers_(std::move(centers)), frequencies_(std::move(frequencies)), speed_(speed) {
  if (centers_.empty() || centers_.size() != frequencies_.size()) {
    throw FormatError("wind rose needs matching, non-empty direction and frequency lists");
  }
  width_ = 360.0 / static_cast<double>(centers_.size());
  for (std::size_t j = 1; j < centers_.size(); ++j) {
    if (std::abs(centers_[j] - centers_[j - 1] - width_) > 1e-6) {
      throw FormatError(fmt::format("direction bins must be evenly spaced by {} deg", width_));
    }
  }
  double total = 0.0;
  for (double f : frequencies_) {
    if (!(f >= 0.0) || !std::isfinite(f)) throw FormatError("negative or non-finite direction frequency");
    total += f;
  }
  if (!(total > 0.0)) throw FormatError("direction frequencies sum to zero");
  for (double& f : frequencies_) f /= total;
  cumulative_.resize(frequencies_.size() + 1, 0.0);
  std::partial_sum(frequencies_.begin(), frequencies_.end(), cumulative_.begin() + 1);

  speed_.validate();
  if (speed_.mode == SpeedMode::Constant) {
    speed_values_ = {speed_.constant_ms};
    speed_probs_ = {1.0};
  } else {
    const auto bins = static_cast<std::size_t>(
        std::llround((speed_.upper_ms - speed_.lower_ms) / speed_.bin_width_ms));
    const double mass = speed_.cdf(speed_.upper_ms) - speed_.cdf(speed_.lower_ms);
    double sum = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
      const double a = speed_.lower_ms + speed_.bin_width_ms * static_cast<double>(b);
      const double c = a + speed_.bin_width_ms;
      speed_values_.push_back(0.5 * (a + c));
      speed_probs_.push_back((speed_.cdf(c) - speed_.cdf(a)) / mass);
      sum += speed_probs_.back();
    }
    for (double& p : speed_probs_) p /= sum;
  }
}

double WindRose::direction_coordinate(double direction_deg) const {
  const double lower = direction_lower();
  return lower + normalize_direction(direction_deg - lower);
}

double WindRose::direction_quantile(double p) const {
  p = std::clamp(p, 0.0, 1.0);
  // First bin whose cumulative upper edge reaches p; p == 0 lands on the first non-empty bin.
  const auto it = std::lower_bound(cumulative_.begin() + 1, cumulative_.end(), p);
  std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin() - 1),
                                        frequencies_.size() - 1);
  while (frequencies_[j] == 0.0 && j + 1 < frequencies_.size()) ++j;
  while (frequencies_[j] == 0.0 && j > 0) --j;
  const double f = frequencies_[j];
  const double t = f > 0.0 ? std::clamp((p - cumulative_[j]) / f, 0.0, 1.0) : 0.5;
  return direction_lower() + width_ * (static_cast<double>(j) + t);
}

double WindRose::speed_quantile(double p) const { return speed_.quantile(p); }

WindRose load_wind_rose(const std::filesystem::path& path, const SpeedDistribution& speed) {
  const CsvTable table = read_csv(path, {"direction_deg", "frequency"});
  std::vector<double> centers;
  std::vector<double> freqs;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (table.rows[r][1] < 0.0) {
      throw FormatError(fmt::format("{}:{}: negative frequency", path.string(), table.line_numbers[r]));
    }
    centers.push_back(table.rows[r][0]);
    freqs.push_back(table.rows[r][1]);
  }
  try {
    return WindRose(std::move(centers), std::move(freqs), speed);
  } catch (const DomainError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

ConditionSample sample_conditions(const WindRose& rose, std::size_t n, std::uint64_t seed) {
  ConditionSample out;
  out.seed = seed;
  if (n == 0) return out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double inv_n = 1.0 / static_cast<double>(n);

  auto stratified = [&] {
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = (static_cast<double>(i) + unit(rng)) * inv_n;
    std::shuffle(u.begin(), u.end(), rng);
    return u;
  };
  const auto pd = stratified();
  const auto ps = stratified();
  out.conditions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.conditions.push_back({normalize_direction(rose.direction_quantile(pd[i])),
                              rose.speed_quantile(ps[i])});
  }
  return out;
}

AepResult baseline_aep(const Layout& layout, const WindRose& rose, const TurbineSpec& spec,
                       const WakeParams& wp, int threads) {
  const std::size_t nd = rose.direction_count();
  const std::size_t ns = rose.speed_count();
  std::vector<double> cell_power(nd * ns, 0.0);
  parallel_for(nd * ns, threads, [&](std::size_t c) {
    const std::size_t j = c / ns;
    const std::size_t k = c % ns;
    const WindCondition cond{normalize_direction(rose.direction_centers()[j]), rose.speed_values()[k]};
    cell_power[c] = farm_power(layout, cond, spec, wp).total_w;
  });
  double mean = 0.0;
  for (std::size_t c = 0; c < nd * ns; ++c) {
    mean += rose.direction_frequencies()[c / ns] * rose.speed_probabilities()[c % ns] * cell_power[c];
  }
  return {kHoursPerYear * mean, nd * ns};
}

}  // namespace wflo
