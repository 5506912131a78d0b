#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "fixtures.hpp"
#include "wflo/errors.hpp"
#include "wflo/wind_resource.hpp"

using namespace wflo;

TEST_CASE("example rose has 72 directions and 22 speed bins") {
  const WindRose rose = fixtures::rose();
  CHECK(rose.direction_count() == 72);
  CHECK(rose.speed_count() == 22);
  CHECK(rose.cell_count() == 1584);
  CHECK(rose.direction_width() == doctest::Approx(5.0));
  CHECK(rose.speed_values().front() == doctest::Approx(3.5));
  CHECK(rose.speed_values().back() == doctest::Approx(24.5));
  const auto& f = rose.direction_frequencies();
  CHECK(std::accumulate(f.begin(), f.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  const auto& p = rose.speed_probabilities();
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("truncated weibull mean matches the quadrature oracle") {
  const SpeedDistribution s;
  // Midpoint rule on the inverse CDF: E[U] = integral of Q(p) over [0, 1].
  const int n = 200000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += s.quantile((i + 0.5) / n);
  CHECK(acc / n == doctest::Approx(7.8613882984898869).epsilon(1e-6));
}

TEST_CASE("speed quantile inverts the truncated CDF") {
  const SpeedDistribution s;
  const double lo = s.cdf(s.lower_ms);
  const double hi = s.cdf(s.upper_ms);
  for (double p = 0.0; p <= 1.0; p += 0.05) {
    const double u = s.quantile(p);
    CHECK(u >= s.lower_ms);
    CHECK(u <= s.upper_ms);
    CHECK((s.cdf(u) - lo) / (hi - lo) == doctest::Approx(p).epsilon(1e-10));
  }
}

TEST_CASE("speed bin masses are truncated CDF differences") {
  const WindRose rose = fixtures::rose();
  const SpeedDistribution& s = rose.speed();
  const double mass = s.cdf(25.0) - s.cdf(3.0);
  for (std::size_t k = 0; k < rose.speed_count(); ++k) {
    const double a = 3.0 + static_cast<double>(k);
    CHECK(rose.speed_probabilities()[k] == doctest::Approx((s.cdf(a + 1.0) - s.cdf(a)) / mass).epsilon(1e-12));
  }
}

TEST_CASE("constant speed collapses the speed axis") {
  SpeedDistribution s;
  s.mode = SpeedMode::Constant;
  s.constant_ms = 8.0;
  const WindRose rose = fixtures::rose(s);
  CHECK(rose.speed_count() == 1);
  CHECK(rose.cell_count() == 72);
  CHECK(rose.speed_values()[0] == 8.0);
  CHECK(rose.speed_quantile(0.3) == 8.0);
}

TEST_CASE("direction quantile is piecewise uniform within bins") {
  const WindRose rose({0.0, 90.0, 180.0, 270.0}, {0.1, 0.0, 0.3, 0.6}, SpeedDistribution{});
  CHECK(rose.direction_lower() == doctest::Approx(-45.0));
  CHECK(rose.direction_quantile(0.0) == doctest::Approx(-45.0));
  CHECK(rose.direction_quantile(0.05) == doctest::Approx(0.0));
  // The empty 90-degree bin is skipped.
  CHECK(rose.direction_quantile(0.1 + 1e-12) == doctest::Approx(135.0).epsilon(1e-6));
  CHECK(rose.direction_quantile(0.25) == doctest::Approx(180.0));
  CHECK(rose.direction_quantile(1.0) == doctest::Approx(315.0));
  double prev = -1e9;
  for (double p = 0.0; p <= 1.0; p += 0.01) {
    const double d = rose.direction_quantile(p);
    CHECK(d >= prev);
    prev = d;
  }
}

TEST_CASE("uneven direction spacing is rejected") {
  CHECK_THROWS_AS(WindRose({0.0, 100.0, 180.0, 270.0}, {0.25, 0.25, 0.25, 0.25}, SpeedDistribution{}), FormatError);
  CHECK_THROWS(WindRose({0.0, 180.0}, {0.0, 0.0}, SpeedDistribution{}));
}

TEST_CASE("condition sample is a latin hypercube in CDF space") {
  const WindRose rose = fixtures::rose();
  const std::size_t n = 50;
  const ConditionSample sample = sample_conditions(rose, n, 42);
  REQUIRE(sample.conditions.size() == n);
  const SpeedDistribution& s = rose.speed();
  const double lo = s.cdf(s.lower_ms);
  const double hi = s.cdf(s.upper_ms);
  std::vector<int> speed_strata;
  std::vector<int> direction_strata;
  // Direction CDF: cumulative frequency up to the bin plus the in-bin fraction.
  const auto& f = rose.direction_frequencies();
  for (const WindCondition& c : sample.conditions) {
    speed_strata.push_back(static_cast<int>(std::floor((s.cdf(c.speed_ms) - lo) / (hi - lo) * n)));
    const double u = rose.direction_coordinate(c.direction_deg) - rose.direction_lower();
    const auto bin = static_cast<std::size_t>(u / rose.direction_width());
    const double cdf = std::accumulate(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(bin), 0.0) +
                       f[bin] * (u / rose.direction_width() - static_cast<double>(bin));
    direction_strata.push_back(static_cast<int>(std::floor(cdf * n + 1e-9)));
  }
  std::sort(speed_strata.begin(), speed_strata.end());
  std::sort(direction_strata.begin(), direction_strata.end());
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(speed_strata[i] == static_cast<int>(i));
    CHECK(direction_strata[i] == static_cast<int>(i));
  }
}

TEST_CASE("condition sampling is deterministic per seed") {
  const WindRose rose = fixtures::rose();
  const auto a = sample_conditions(rose, 30, 9);
  const auto b = sample_conditions(rose, 30, 9);
  const auto c = sample_conditions(rose, 30, 10);
  bool differs = false;
  for (std::size_t i = 0; i < 30; ++i) {
    CHECK(a.conditions[i].direction_deg == b.conditions[i].direction_deg);
    CHECK(a.conditions[i].speed_ms == b.conditions[i].speed_ms);
    differs = differs || a.conditions[i].speed_ms != c.conditions[i].speed_ms;
  }
  CHECK(differs);
}

TEST_CASE("baseline AEP of a lone turbine is the expected curve power") {
  const WindRose rose = fixtures::rose();
  const TurbineSpec spec = fixtures::turbine();
  Layout layout;
  layout.positions = {{100, 100}};
  const AepResult r = baseline_aep(layout, rose, spec, WakeParams{});
  CHECK(r.farm_power_calls == 1584);
  double expected = 0.0;
  for (std::size_t k = 0; k < rose.speed_count(); ++k) {
    expected += rose.speed_probabilities()[k] * spec.power(rose.speed_values()[k]);
  }
  CHECK(r.aep_wh == doctest::Approx(8760.0 * expected).epsilon(1e-12));
}

TEST_CASE("baseline AEP does not depend on the thread count") {
  const WindRose rose = fixtures::rose();
  const TurbineSpec spec = fixtures::turbine();
  Layout layout;
  layout.positions = {{0, 0}, {500, 100}, {900, 900}, {300, 700}};
  const double one = baseline_aep(layout, rose, spec, WakeParams{}, 1).aep_wh;
  const double four = baseline_aep(layout, rose, spec, WakeParams{}, 4).aep_wh;
  CHECK(one == four);
}

TEST_CASE("wind rose file errors name the line") {
  const auto path = std::filesystem::temp_directory_path() / "wflo_bad_rose.csv";
  {
    std::ofstream out(path);
    out << "direction_deg,frequency\n0,0.5\n180,0.5,9\n";
  }
  try {
    load_wind_rose(path, SpeedDistribution{});
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
  std::filesystem::remove(path);
}
