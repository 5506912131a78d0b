#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "wflo/errors.hpp"
#include "wflo/pce.hpp"

using namespace wflo;

namespace {

DiscreteMeasure uniform_grid(int n) {
  DiscreteMeasure m;
  for (int i = 0; i < n; ++i) {
    m.points.push_back(-1.0 + 2.0 * i / (n - 1.0));
    m.weights.push_back(1.0 / n);
  }
  return m;
}

DiscreteMeasure skewed_grid(int n) {
  DiscreteMeasure m;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    m.points.push_back(-1.0 + 2.0 * i / (n - 1.0));
    m.weights.push_back(std::exp(-0.2 * i));
    total += m.weights.back();
  }
  for (double& w : m.weights) w /= total;
  return m;
}

}  // namespace

TEST_CASE("standardizer maps the interval onto [-1, 1]") {
  const Standardizer s{3.0, 25.0};
  CHECK(s(3.0) == -1.0);
  CHECK(s(25.0) == 1.0);
  CHECK(s(14.0) == doctest::Approx(0.0));
  CHECK(Standardizer{8.0, 8.0}(8.0) == 0.0);
}

TEST_CASE("tensor basis uses the total-degree set in graded order") {
  const OrthoBasis1D a = build_basis(uniform_grid(20), 6);
  const OrthoBasis1D b = build_basis(skewed_grid(20), 6);
  for (int order = 0; order <= 6; ++order) {
    const TensorBasis t(a, b, order);
    CHECK(t.size() == total_degree_count(order));
    CHECK(t.indices().front() == MultiIndex{0, 0});
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t.indices()[i].total() >= t.indices()[i - 1].total());
  }
  CHECK(total_degree_count(10) == 66);
}

TEST_CASE("tensor basis is clipped to what each axis supports") {
  const OrthoBasis1D a = build_basis(uniform_grid(20), 4);
  const OrthoBasis1D single = build_basis(DiscreteMeasure{{0.0}, {1.0}}, 0);
  const TensorBasis t(a, single, 4);
  CHECK(t.size() == 5);
  for (const auto& idx : t.indices()) CHECK(idx.speed == 0);
}

TEST_CASE("tensor basis is orthonormal under the product measure") {
  const OrthoBasis1D a = build_basis(uniform_grid(25), 5);
  const OrthoBasis1D b = build_basis(skewed_grid(22), 5);
  const TensorBasis t(a, b, 5);
  const auto& ma = a.measure();
  const auto& mb = b.measure();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(t.size()), static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < ma.points.size(); ++i) {
    for (std::size_t j = 0; j < mb.points.size(); ++j) {
      const Eigen::RowVectorXd v = t.evaluate_all(ma.points[i], mb.points[j]);
      gram += ma.weights[i] * mb.weights[j] * v.transpose() * v;
    }
  }
  CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("monte carlo gram of the tensor basis approaches identity") {
  const OrthoBasis1D a = build_basis(uniform_grid(25), 3);
  const OrthoBasis1D b = build_basis(skewed_grid(22), 3);
  const TensorBasis t(a, b, 3);
  std::mt19937_64 rng(11);
  std::discrete_distribution<std::size_t> da(a.measure().weights.begin(), a.measure().weights.end());
  std::discrete_distribution<std::size_t> db(b.measure().weights.begin(), b.measure().weights.end());
  const int n = 200000;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(t.size()), static_cast<Eigen::Index>(t.size()));
  for (int s = 0; s < n; ++s) {
    const Eigen::RowVectorXd v = t.evaluate_all(a.measure().points[da(rng)], b.measure().points[db(rng)]);
    gram += v.transpose() * v;
  }
  gram /= n;
  CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() <= 0.1);
}

TEST_CASE("fit recovers an expansion that lies in the basis") {
  const OrthoBasis1D a = build_basis(uniform_grid(30), 4);
  const OrthoBasis1D b = build_basis(skewed_grid(30), 4);
  const TensorBasis t(a, b, 3);
  Eigen::VectorXd truth(static_cast<Eigen::Index>(t.size()));
  for (Eigen::Index i = 0; i < truth.size(); ++i) truth(i) = 1.0 / (1.0 + static_cast<double>(i));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const int m = 40;
  Eigen::MatrixXd xi(m, 2);
  Eigen::VectorXd y(m);
  for (int r = 0; r < m; ++r) {
    xi(r, 0) = unit(rng);
    xi(r, 1) = unit(rng);
    y(r) = t.evaluate_all(xi(r, 0), xi(r, 1)).dot(truth);
  }
  const PceModel model = fit_pce(xi, y, a, b, 3);
  CHECK(model.rank == static_cast<int>(t.size()));
  CHECK_FALSE(model.rank_deficient);
  CHECK((model.coefficients - truth).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(model.mean() == doctest::Approx(truth(0)).epsilon(1e-10));
  CHECK(model.evaluate(t, 0.2, -0.4) == doctest::Approx(t.evaluate_all(0.2, -0.4).dot(truth)).epsilon(1e-9));
}

TEST_CASE("cross validation picks the lowest exact order") {
  const OrthoBasis1D a = build_basis(uniform_grid(30), 6);
  const OrthoBasis1D b = build_basis(skewed_grid(30), 6);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const int m = 60;
  Eigen::MatrixXd xi(m, 2);
  Eigen::VectorXd y(m);
  for (int r = 0; r < m; ++r) {
    xi(r, 0) = unit(rng);
    xi(r, 1) = unit(rng);
    y(r) = 2.0 + xi(r, 0) * xi(r, 1) - 0.5 * xi(r, 1) * xi(r, 1);
  }
  const OrderSelection sel = select_order(xi, y, a, b, 5, 6);
  CHECK(sel.order == 2);
  CHECK(sel.rmse_by_order.size() == 7);
  CHECK(std::isnan(sel.rmse_by_order[0]));
  CHECK(sel.rmse_by_order[1] > 1e-3);
}

TEST_CASE("order selection skips orders the folds cannot support") {
  const OrthoBasis1D a = build_basis(uniform_grid(30), 10);
  const OrthoBasis1D b = build_basis(skewed_grid(30), 10);
  Eigen::MatrixXd xi(10, 2);
  Eigen::VectorXd y(10);
  for (int r = 0; r < 10; ++r) {
    xi(r, 0) = -1.0 + 0.2 * r;
    xi(r, 1) = std::sin(3.0 * r);
    y(r) = r;
  }
  // Smallest training fold is 8 rows: order 2 (6 terms) fits, order 3 (10 terms) does not.
  const OrderSelection sel = select_order(xi, y, a, b, 5, 10);
  CHECK(sel.order <= 2);
  for (std::size_t o = 3; o < sel.rmse_by_order.size(); ++o) CHECK(std::isnan(sel.rmse_by_order[o]));
}

TEST_CASE("PCE AEP uses exactly the requested farm power calls") {
  const WindRose rose = fixtures::rose();
  const TurbineSpec spec = fixtures::turbine();
  Layout layout;
  layout.positions = {{0, 0}, {504, 0}, {0, 756}, {1008, 1008}};
  const PceAepResult r = estimate_aep(layout, rose, 50, 123, spec, WakeParams{});
  CHECK(r.farm_power_calls == 50);
  CHECK(r.model.seed == 123);
  CHECK(r.model.samples.rows() == 50);
  CHECK(r.aep_wh == doctest::Approx(8760.0 * r.model.coefficients(0)));
}

TEST_CASE("PCE AEP is deterministic per seed and thread-independent") {
  const WindRose rose = fixtures::rose();
  const TurbineSpec spec = fixtures::turbine();
  Layout layout;
  layout.positions = {{0, 0}, {504, 252}, {1008, 1008}};
  const double a = estimate_aep(layout, rose, 50, 4, spec, WakeParams{}, PceOptions{10, 5, 1}).aep_wh;
  const double b = estimate_aep(layout, rose, 50, 4, spec, WakeParams{}, PceOptions{10, 5, 3}).aep_wh;
  const double c = estimate_aep(layout, rose, 50, 5, spec, WakeParams{}, PceOptions{10, 5, 1}).aep_wh;
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("PCE AEP of a lone turbine tracks the traversal value") {
  const WindRose rose = fixtures::rose();
  const TurbineSpec spec = fixtures::turbine();
  Layout layout;
  layout.positions = {{500, 500}};
  const double base = baseline_aep(layout, rose, spec, WakeParams{}).aep_wh;
  // Seed-to-seed scatter of a 50-sample fit is a few percent; the average must stay close.
  double mean_err = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const double err = estimate_aep(layout, rose, 50, seed, spec, WakeParams{}).aep_wh / base - 1.0;
    CHECK(std::abs(err) <= 0.08);
    mean_err += err / 20.0;
  }
  CHECK(std::abs(mean_err) <= 0.025);
}

TEST_CASE("constant speed rose reduces to a one-dimensional expansion") {
  SpeedDistribution s;
  s.mode = SpeedMode::Constant;
  const WindRose rose = fixtures::rose(s);
  const TurbineSpec spec = fixtures::turbine();
  Layout layout;
  layout.positions = {{0, 0}, {504, 0}};
  const PceAepResult r = estimate_aep(layout, rose, 40, 2, spec, WakeParams{});
  for (const auto& idx : r.model.indices) CHECK(idx.speed == 0);
  CHECK(r.farm_power_calls == 40);
}

TEST_CASE("too few samples are rejected") {
  Layout layout;
  layout.positions = {{0, 0}};
  CHECK_THROWS_AS(estimate_aep(layout, fixtures::rose(), 1, 1, fixtures::turbine(), WakeParams{}), DomainError);
}

TEST_CASE("model document carries the fit summary") {
  Layout layout;
  layout.positions = {{0, 0}, {504, 0}};
  const PceAepResult r = estimate_aep(layout, fixtures::rose(), 50, 3, fixtures::turbine(), WakeParams{});
  const auto j = r.model.to_json();
  CHECK(j.at("order").get<int>() == r.model.order);
  CHECK(j.at("terms").size() == static_cast<std::size_t>(r.model.coefficients.size()));
}
