#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace wflo {

/// Discrete probability measure: support points with non-negative weights summing to 1.
struct DiscreteMeasure {
  std::vector<double> points;
  std::vector<double> weights;

  void validate() const;
  std::size_t support_size() const;  // points with positive weight
};

/// Family of polynomials phi_0..phi_p orthonormal under a discrete measure.
///
/// Built by Gram-Schmidt (two passes) on x * phi_{k-1}, which spans the same
/// space as the monomials but stays far better conditioned. Each polynomial
/// is kept as monomial coefficients for evaluation.
class OrthoBasis1D {
 public:
  int degree() const { return static_cast<int>(coefficients_.rows()) - 1; }
  int requested_degree() const { return requested_degree_; }
  bool reduced() const { return degree() < requested_degree_; }

  /// Row k holds the monomial coefficients of phi_k, lowest power first.
  const Eigen::MatrixXd& monomial_coefficients() const { return coefficients_; }
  const DiscreteMeasure& measure() const { return measure_; }

  double evaluate(int k, double x) const;
  /// Values of phi_0..phi_degree at x.
  Eigen::VectorXd evaluate_all(double x) const;
  /// <phi_i, phi_j> under the stored measure.
  Eigen::MatrixXd gram() const;

 private:
  friend OrthoBasis1D build_basis(const DiscreteMeasure& measure, int max_degree);
  Eigen::MatrixXd coefficients_;
  DiscreteMeasure measure_;
  int requested_degree_ = 0;
};

/// Orthonormal basis up to `max_degree`. When the measure cannot support that
/// degree (too few support points, or the next polynomial is numerically
/// dependent) the degree is reduced and a warning is logged.
OrthoBasis1D build_basis(const DiscreteMeasure& measure, int max_degree);

}  // namespace wflo
