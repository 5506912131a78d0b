#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "wflo/kriging.hpp"

namespace oracle {

inline Eigen::VectorXd trend_terms(wflo::TrendKind kind, const Eigen::VectorXd& x) {
  std::vector<double> g{1.0};
  if (kind != wflo::TrendKind::Constant) {
    for (Eigen::Index i = 0; i < x.size(); ++i) g.push_back(x(i));
  }
  if (kind == wflo::TrendKind::Quadratic) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      for (Eigen::Index j = i; j < x.size(); ++j) g.push_back(x(i) * x(j));
    }
  }
  return Eigen::Map<Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
}

struct DensePrediction {
  double mean;
  double sd;
};

/// Universal Kriging by a direct bordered solve with full-pivot LU, on the
/// model's standardized responses and fitted hyperparameters.
inline DensePrediction dense_predict(const wflo::KrigingModel& model, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd& xs = model.inputs();
  const Eigen::VectorXd& y = model.responses();
  const Eigen::VectorXd& theta = model.theta();
  const Eigen::Index n = xs.rows();
  auto corr = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return std::exp(-((a - b).array().square() * theta.array()).sum());
  };
  Eigen::MatrixXd r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) r(i, j) = corr(xs.row(i).transpose(), xs.row(j).transpose());
    r(i, i) += model.nugget();
  }
  const Eigen::Index p = trend_terms(model.trend(), xs.row(0).transpose()).size();
  Eigen::MatrixXd f(n, p);
  for (Eigen::Index i = 0; i < n; ++i) f.row(i) = trend_terms(model.trend(), xs.row(i).transpose()).transpose();

  const Eigen::FullPivLU<Eigen::MatrixXd> lu(r);
  const Eigen::MatrixXd rf = lu.solve(f);
  const Eigen::VectorXd beta = (f.transpose() * rf).fullPivLu().solve(rf.transpose() * y);
  const Eigen::VectorXd resid = y - f * beta;
  const double sigma2 = resid.dot(lu.solve(resid)) / static_cast<double>(n);

  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n + p, n + p);
  k.topLeftCorner(n, n) = r;
  k.topRightCorner(n, p) = f;
  k.bottomLeftCorner(p, n) = f.transpose();
  Eigen::VectorXd rhs(n + p);
  for (Eigen::Index i = 0; i < n; ++i) {
    rhs(i) = corr(xs.row(i).transpose(), x);
    if ((xs.row(i).transpose() - x).squaredNorm() == 0.0) rhs(i) += model.nugget();
  }
  rhs.tail(p) = trend_terms(model.trend(), x);
  const Eigen::VectorXd sol = k.fullPivLu().solve(rhs);
  const Eigen::VectorXd w = sol.head(n);
  const double mean = w.dot(y);
  const double var = sigma2 * (1.0 - sol.dot(rhs));
  return {mean, std::sqrt(std::max(0.0, var))};
}

}  // namespace oracle
