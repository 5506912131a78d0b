#include "wflo/orthopoly.hpp"

#include <cmath>

#include <fmt/format.h>

#include "wflo/errors.hpp"
#include "wflo/log.hpp"

namespace wflo {

void DiscreteMeasure::validate() const {
  if (points.empty() || points.size() != weights.size()) {
    throw DomainError("measure needs matching, non-empty points and weights");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("measure weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError(fmt::format("measure weights sum to {}", total));
}

std::size_t DiscreteMeasure::support_size() const {
  std::size_t n = 0;
  for (double w : weights) n += w > 0.0 ? 1 : 0;
  return n;
}

double OrthoBasis1D::evaluate(int k, double x) const {
  const auto row = coefficients_.row(k);
  double acc = 0.0;
  for (Eigen::Index p = row.size() - 1; p >= 0; --p) acc = acc * x + row(p);
  return acc;
}

Eigen::VectorXd OrthoBasis1D::evaluate_all(double x) const {
  Eigen::VectorXd out(coefficients_.rows());
  for (Eigen::Index k = 0; k < coefficients_.rows(); ++k) out(k) = evaluate(static_cast<int>(k), x);
  return out;
}

Eigen::MatrixXd OrthoBasis1D::gram() const {
  const Eigen::Index p = coefficients_.rows();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t i = 0; i < measure_.points.size(); ++i) {
    const Eigen::VectorXd v = evaluate_all(measure_.points[i]);
    g.noalias() += measure_.weights[i] * v * v.transpose();
  }
  return g;
}

OrthoBasis1D build_basis(const DiscreteMeasure& measure, int max_degree) {
  measure.validate();
  if (max_degree < 0) throw DomainError("max_degree must be non-negative");

  const auto m = static_cast<Eigen::Index>(measure.points.size());
  const Eigen::Map<const Eigen::VectorXd> x(measure.points.data(), m);
  const Eigen::Map<const Eigen::VectorXd> w(measure.weights.data(), m);
  const int cap = std::min<int>(max_degree, static_cast<int>(measure.support_size()) - 1);

  // values(k, i) = phi_k(x_i); coeffs(k, p) = coefficient of x^p in phi_k.
  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(cap + 1, m);
  Eigen::MatrixXd coeffs = Eigen::MatrixXd::Zero(cap + 1, cap + 1);
  values.row(0).setOnes();
  coeffs(0, 0) = 1.0;
  int degree = 0;
  for (int k = 1; k <= cap; ++k) {
    Eigen::RowVectorXd v = values.row(k - 1).cwiseProduct(x.transpose());
    Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(cap + 1);
    c.segment(1, k) = coeffs.row(k - 1).head(k);
    const double before = std::sqrt(v.cwiseAbs2().dot(w));
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < k; ++j) {
        const double proj = v.cwiseProduct(values.row(j)).dot(w);
        v -= proj * values.row(j);
        c -= proj * coeffs.row(j);
      }
    }
    const double norm = std::sqrt(v.cwiseAbs2().dot(w));
    if (!(norm > 1e-10 * before)) break;
    values.row(k) = v / norm;
    coeffs.row(k) = c / norm;
    degree = k;
  }
  if (degree < max_degree) {
    log::warn(fmt::format("orthogonal basis reduced from degree {} to {} (measure has {} support points)",
                          max_degree, degree, measure.support_size()));
  }

  OrthoBasis1D basis;
  basis.coefficients_ = coeffs.topLeftCorner(degree + 1, degree + 1);
  basis.measure_ = measure;
  basis.requested_degree_ = max_degree;
  return basis;
}

}  // namespace wflo
