#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kriging_oracle.hpp"
#include "wflo/errors.hpp"
#include "wflo/kriging.hpp"

using namespace wflo;

namespace {

double branin_like(const Eigen::VectorXd& x) {
  double v = std::sin(3.0 * x(0)) + 0.5 * x(1) * x(1);
  for (Eigen::Index k = 2; k < x.size(); ++k) v += 0.3 * std::cos(2.0 * x(k));
  return 10.0 + v;
}

struct Data {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

Data sample_data(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Data data{Eigen::MatrixXd(n, d), Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) data.x(i, k) = unit(rng);
    data.y(i) = branin_like(data.x.row(i).transpose());
  }
  return data;
}

}  // namespace

TEST_CASE("trend bases have the expected sizes") {
  CHECK(trend_size(TrendKind::Constant, 4) == 1);
  CHECK(trend_size(TrendKind::Linear, 4) == 5);
  CHECK(trend_size(TrendKind::Quadratic, 4) == 15);
  const Eigen::VectorXd g = trend_basis(TrendKind::Quadratic, Eigen::Vector2d(2.0, 3.0));
  CHECK(g.size() == 6);
  CHECK(g(0) == 1.0);
  CHECK(g(5) == 9.0);
  CHECK(trend_from_string(to_string(TrendKind::Linear)) == TrendKind::Linear);
}

TEST_CASE("fitted model interpolates its training data") {
  const Data data = sample_data(30, 2, 1);
  const KrigingModel m = fit_kriging(data.x, data.y);
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    const Prediction p = m.predict(data.x.row(i).transpose());
    CHECK(std::abs(p.mean - m.standardize(data.y(i))) <= 1e-5);
    CHECK(p.sd <= 1e-3);
  }
}

TEST_CASE("prediction reverts to the trend far from the data") {
  const Data data = sample_data(25, 2, 2);
  KrigingOptions opts;
  opts.trend = TrendKind::Constant;
  const KrigingModel m = fit_kriging(data.x, data.y, opts);
  const Prediction far = m.predict(Eigen::Vector2d(60.0, -60.0));
  CHECK(far.mean == doctest::Approx(m.beta()(0)).epsilon(1e-9));
  CHECK(far.sd >= std::sqrt(m.process_variance()) * (1.0 - 1e-9));
}

TEST_CASE("predictions agree with a dense bordered solve") {
  for (TrendKind trend : {TrendKind::Constant, TrendKind::Linear, TrendKind::Quadratic}) {
    const Data data = sample_data(40, 3, 7);
    KrigingOptions opts;
    opts.trend = trend;
    const KrigingModel m = fit_kriging(data.x, data.y, opts);
    REQUIRE(m.trend() == trend);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unit(-0.2, 1.2);
    for (int t = 0; t < 20; ++t) {
      const Eigen::Vector3d x(unit(rng), unit(rng), unit(rng));
      const Prediction p = m.predict(x);
      const oracle::DensePrediction q = oracle::dense_predict(m, x);
      CHECK(std::abs(p.mean - q.mean) <= 1e-8);
      CHECK(std::abs(p.sd - q.sd) <= 1e-8);
    }
  }
}

TEST_CASE("likelihood gradient matches central differences") {
  const Data data = sample_data(20, 3, 4);
  const double mean = data.y.mean();
  const double sd = std::sqrt((data.y.array() - mean).square().sum() / 19.0);
  const Eigen::VectorXd ys = (data.y.array() - mean) / sd;
  const Eigen::Vector3d lt(std::log(0.8), std::log(3.0), std::log(0.1));
  const LikelihoodValue v = concentrated_log_likelihood(data.x, ys, TrendKind::Linear, lt, 1e-8);
  REQUIRE(v.ok);
  for (Eigen::Index k = 0; k < 3; ++k) {
    const double h = 1e-5;
    Eigen::VectorXd a = lt;
    Eigen::VectorXd b = lt;
    a(k) += h;
    b(k) -= h;
    const double fd = (concentrated_log_likelihood(data.x, ys, TrendKind::Linear, a, 1e-8).value -
                       concentrated_log_likelihood(data.x, ys, TrendKind::Linear, b, 1e-8).value) /
                      (2.0 * h);
    CHECK(v.gradient(k) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("maximum likelihood beats random hyperparameters in the box") {
  const Data data = sample_data(30, 2, 5);
  const KrigingModel m = fit_kriging(data.x, data.y);
  const Eigen::VectorXd ys = m.responses();
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> lg(-2.0, 2.0);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Vector2d lt(lg(rng) * std::log(10.0), lg(rng) * std::log(10.0));
    const LikelihoodValue v = concentrated_log_likelihood(m.inputs(), ys, m.trend(), lt, m.nugget());
    if (v.ok) CHECK(v.value <= m.log_likelihood() + 1e-6 * std::abs(m.log_likelihood()));
  }
  for (Eigen::Index k = 0; k < 2; ++k) {
    CHECK(m.theta()(k) >= 0.01 * (1.0 - 1e-9));
    CHECK(m.theta()(k) <= 100.0 * (1.0 + 1e-9));
  }
}

TEST_CASE("fit is deterministic for a fixed seed") {
  const Data data = sample_data(25, 3, 8);
  const KrigingModel a = fit_kriging(data.x, data.y);
  const KrigingModel b = fit_kriging(data.x, data.y);
  CHECK((a.theta() - b.theta()).norm() == 0.0);
}

TEST_CASE("quadratic trend falls back when samples are scarce") {
  // d = 3: quadratic needs more than 10 samples, linear at least 5.
  const Data eleven = sample_data(11, 3, 9);
  CHECK(fit_kriging(eleven.x, eleven.y).trend() == TrendKind::Quadratic);
  const Data ten = sample_data(10, 3, 9);
  const KrigingModel lin = fit_kriging(ten.x, ten.y);
  CHECK(lin.trend() == TrendKind::Linear);
  CHECK(lin.trend_fallback());
  const Data four = sample_data(4, 3, 9);
  CHECK(fit_kriging(four.x, four.y).trend() == TrendKind::Constant);
}

TEST_CASE("duplicate inputs are merged by averaging") {
  Eigen::MatrixXd x(4, 1);
  x << 0.0, 0.5, 0.5, 1.0;
  Eigen::VectorXd y(4);
  y << 1.0, 2.0, 4.0, 0.0;
  KrigingOptions opts;
  opts.trend = TrendKind::Constant;
  const KrigingModel m = fit_kriging(x, y, opts);
  CHECK(m.sample_count() == 3);
  CHECK(m.destandardize(m.predict(Eigen::VectorXd::Constant(1, 0.5)).mean) == doctest::Approx(3.0).epsilon(1e-5));
}

TEST_CASE("constant responses give a degenerate flat model") {
  const Data data = sample_data(8, 2, 10);
  const KrigingModel m = fit_kriging(data.x, Eigen::VectorXd::Constant(8, 5.0));
  CHECK(m.degenerate());
  const Prediction p = m.predict(Eigen::Vector2d(0.3, 0.3));
  CHECK(m.destandardize(p.mean) == 5.0);
  CHECK(p.sd == 0.0);
}

TEST_CASE("too little data is rejected") {
  CHECK_THROWS_AS(fit_kriging(Eigen::MatrixXd::Zero(1, 2), Eigen::VectorXd::Zero(1)), DomainError);
  CHECK_THROWS_AS(fit_kriging(Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(2)), DomainError);
}

TEST_CASE("model document round-trips") {
  const Data data = sample_data(15, 2, 11);
  const KrigingModel m = fit_kriging(data.x, data.y);
  const KrigingModel r = KrigingModel::from_json(m.to_json());
  const Eigen::Vector2d x(0.31, 0.77);
  CHECK(r.predict(x).mean == doctest::Approx(m.predict(x).mean).epsilon(1e-10));
  CHECK(r.predict(x).sd == doctest::Approx(m.predict(x).sd).epsilon(1e-8));
}

TEST_CASE("expected improvement identities") {
  CHECK(expected_improvement(1.0, 1.0, 1.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-14));
  CHECK(expected_improvement(2.0, 0.0, 1.0) == 1.0);
  CHECK(expected_improvement(0.0, 0.0, 1.0) == 0.0);
  CHECK(expected_improvement(1.5, 1e-9, 1.0) == doctest::Approx(0.5).epsilon(1e-9));
  std::mt19937_64 rng(12);
  std::normal_distribution<double> z(0.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const double mu = z(rng);
    const double s = std::abs(z(rng));
    const double ei = expected_improvement(mu, s, 0.0);
    CHECK(ei >= 0.0);
    CHECK(ei >= std::max(0.0, mu) - 1e-12);
  }
}
