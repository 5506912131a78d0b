#pragma once

#include <functional>

#include <Eigen/Dense>

namespace wflo {

struct BoxMinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Returns f(x) and writes the gradient into `grad`. Non-finite values mark
/// infeasible points; the line search backs away from them.
using ObjectiveWithGradient = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// Projected L-BFGS on the box [lower, upper]. Small memory (5 pairs),
/// Armijo backtracking along the projected path.
BoxMinimizeResult minimize_box(const ObjectiveWithGradient& f, Eigen::VectorXd x0,
                               const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                               int max_iterations, double tolerance = 1e-6);

}  // namespace wflo
