#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "fixtures.hpp"
#include "wflo/errors.hpp"
#include "wflo/orthopoly.hpp"
#include "wflo/pce.hpp"

using namespace wflo;

namespace {

double max_identity_error(const Eigen::MatrixXd& g) {
  return (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

// Gauss-Legendre rule for the uniform probability measure on [-1, 1], via
// the eigen-decomposition of the Legendre Jacobi matrix.
DiscreteMeasure gauss_legendre(int n) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    j(k, k - 1) = j(k - 1, k) = b;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  DiscreteMeasure m;
  for (int i = 0; i < n; ++i) {
    m.points.push_back(es.eigenvalues()(i));
    m.weights.push_back(es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
  }
  double total = 0.0;
  for (double w : m.weights) total += w;
  for (double& w : m.weights) w /= total;
  return m;
}

double normalized_legendre(int k, double x) {
  double p0 = 1.0;
  double p1 = x;
  if (k == 0) return 1.0;
  for (int n = 1; n < k; ++n) {
    const double p2 = ((2.0 * n + 1.0) * x * p1 - n * p0) / (n + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return std::sqrt(2.0 * k + 1.0) * p1;
}

}  // namespace

TEST_CASE("uniform measure reproduces normalized Legendre polynomials") {
  const OrthoBasis1D basis = build_basis(gauss_legendre(12), 10);
  REQUIRE(basis.degree() == 10);
  CHECK(max_identity_error(basis.gram()) <= 1e-8);
  double worst = 0.0;
  for (double x = -1.0; x <= 1.0 + 1e-12; x += 0.01) {
    for (int k = 0; k <= 10; ++k) worst = std::max(worst, std::abs(basis.evaluate(k, x) - normalized_legendre(k, x)));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("wind rose bases are orthonormal under their binned measures") {
  const WindRoseBases b = wind_rose_bases(fixtures::rose(), 10);
  CHECK(b.direction.degree() == 10);
  CHECK(b.speed.degree() == 10);
  CHECK(max_identity_error(b.direction.gram()) <= 1e-8);
  CHECK(max_identity_error(b.speed.gram()) <= 1e-8);
}

TEST_CASE("random discrete measures give orthonormal bases") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    DiscreteMeasure m;
    const int n = 15 + trial;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      m.points.push_back(-1.0 + 2.0 * i / (n - 1.0));
      m.weights.push_back(0.05 + unit(rng));
      total += m.weights.back();
    }
    for (double& w : m.weights) w /= total;
    const OrthoBasis1D basis = build_basis(m, 8);
    CHECK(basis.degree() == 8);
    CHECK(max_identity_error(basis.gram()) <= 1e-8);
  }
}

TEST_CASE("degree is reduced when the support is too small") {
  DiscreteMeasure m{{-1.0, 0.0, 1.0, 0.5}, {0.3, 0.4, 0.3, 0.0}};
  const OrthoBasis1D basis = build_basis(m, 5);
  CHECK(basis.degree() == 2);
  CHECK(basis.requested_degree() == 5);
  CHECK(basis.reduced());
  CHECK(max_identity_error(basis.gram()) <= 1e-12);
}

TEST_CASE("single-point measure keeps only the constant") {
  DiscreteMeasure m{{0.0}, {1.0}};
  const OrthoBasis1D basis = build_basis(m, 3);
  CHECK(basis.degree() == 0);
  CHECK(basis.evaluate(0, 0.7) == 1.0);
}

TEST_CASE("evaluate_all agrees with evaluate") {
  const OrthoBasis1D basis = build_basis(gauss_legendre(8), 6);
  const Eigen::VectorXd all = basis.evaluate_all(0.37);
  for (int k = 0; k <= 6; ++k) CHECK(all(k) == doctest::Approx(basis.evaluate(k, 0.37)).epsilon(1e-14));
}

TEST_CASE("invalid measures are rejected") {
  CHECK_THROWS_AS(build_basis(DiscreteMeasure{{0.0, 1.0}, {0.5, 0.6}}, 1), DomainError);
  CHECK_THROWS_AS(build_basis(DiscreteMeasure{{0.0, 1.0}, {1.5, -0.5}}, 1), DomainError);
  CHECK_THROWS_AS(build_basis(DiscreteMeasure{{0.0, 1.0}, {0.5, 0.5}}, -1), DomainError);
}
