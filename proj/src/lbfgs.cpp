#include "wflo/lbfgs.hpp"

#include <cmath>
#include <deque>

namespace wflo {
namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

// Gradient with components removed where the bound is active and the gradient pushes outward.
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                   const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  Eigen::VectorXd pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if ((x(i) <= lo(i) && g(i) > 0.0) || (x(i) >= hi(i) && g(i) < 0.0)) pg(i) = 0.0;
  }
  return pg;
}

}  // namespace

BoxMinimizeResult minimize_box(const ObjectiveWithGradient& f, Eigen::VectorXd x0,
                               const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                               int max_iterations, double tolerance) {
  constexpr std::size_t memory = 5;
  BoxMinimizeResult res;
  Eigen::VectorXd x = project(x0, lower, upper);
  Eigen::VectorXd g(x.size());
  double fx = f(x, g);
  res.x = x;
  res.value = fx;
  if (!std::isfinite(fx)) return res;

  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  for (int it = 0; it < max_iterations; ++it) {
    res.iterations = it + 1;
    Eigen::VectorXd pg = projected_gradient(x, g, lower, upper);
    if (pg.lpNorm<Eigen::Infinity>() < tolerance) {
      res.converged = true;
      break;
    }
    // Two-loop recursion on the free variables.
    Eigen::VectorXd q = pg;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      const double rho = 1.0 / y_hist[k].dot(s_hist[k]);
      alpha[k] = rho * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double rho = 1.0 / y_hist[k].dot(s_hist[k]);
      const double b = rho * y_hist[k].dot(q);
      q += (alpha[k] - b) * s_hist[k];
    }
    Eigen::VectorXd dir = -q;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (pg(i) == 0.0) dir(i) = 0.0;
    }
    if (dir.dot(pg) >= 0.0) {
      dir = -pg;
      s_hist.clear();
      y_hist.clear();
    }
    if (s_hist.empty()) {
      // First step: cap the move at one unit in the largest coordinate.
      const double big = dir.lpNorm<Eigen::Infinity>();
      if (big > 1.0) dir /= big;
    }

    double step = 1.0;
    Eigen::VectorXd x_new;
    Eigen::VectorXd g_new(x.size());
    double f_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      x_new = project(x + step * dir, lower, upper);
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * g.dot(x_new - x)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd yv = g_new - g;
    const bool stalled = std::abs(fx - f_new) <= tolerance * (1.0 + std::abs(fx));
    x = x_new;
    g = g_new;
    fx = f_new;
    if (s.dot(yv) > 1e-12 * s.norm() * yv.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(yv);
      if (s_hist.size() > memory) {
        s_hist.pop_front();
        y_hist.pop_front();
      }
    }
    if (stalled) {
      res.converged = true;
      break;
    }
  }
  res.x = x;
  res.value = fx;
  return res;
}

}  // namespace wflo
