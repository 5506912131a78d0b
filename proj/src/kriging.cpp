#include "wflo/kriging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <vector>

#include <fmt/format.h>

#include "wflo/errors.hpp"
#include "wflo/lbfgs.hpp"
#include "wflo/log.hpp"

namespace wflo {

std::string to_string(TrendKind kind) {
  switch (kind) {
    case TrendKind::Constant: return "constant";
    case TrendKind::Linear: return "linear";
    case TrendKind::Quadratic: return "quadratic";
  }
  return "unknown";
}

TrendKind trend_from_string(const std::string& name) {
  if (name == "constant") return TrendKind::Constant;
  if (name == "linear") return TrendKind::Linear;
  if (name == "quadratic") return TrendKind::Quadratic;
  throw ConfigError("unknown trend '" + name + "' (expected constant|linear|quadratic)");
}

Eigen::Index trend_size(TrendKind kind, Eigen::Index dim) {
  switch (kind) {
    case TrendKind::Constant: return 1;
    case TrendKind::Linear: return dim + 1;
    case TrendKind::Quadratic: return (dim + 1) * (dim + 2) / 2;
  }
  return 1;
}

Eigen::VectorXd trend_basis(TrendKind kind, const Eigen::VectorXd& x) {
  const Eigen::Index d = x.size();
  Eigen::VectorXd g(trend_size(kind, d));
  g(0) = 1.0;
  if (kind == TrendKind::Constant) return g;
  g.segment(1, d) = x;
  if (kind == TrendKind::Linear) return g;
  Eigen::Index k = d + 1;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) g(k++) = x(i) * x(j);
  }
  return g;
}

namespace {

constexpr double kMaxNugget = 1e-6;

Eigen::MatrixXd trend_matrix(TrendKind kind, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd f(x.rows(), trend_size(kind, x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) f.row(i) = trend_basis(kind, x.row(i).transpose()).transpose();
  return f;
}

// Correlation matrix without the nugget.
Eigen::MatrixXd correlation(const Eigen::MatrixXd& x, const Eigen::VectorXd& theta) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double q = ((x.row(i) - x.row(j)).array().square() * theta.transpose().array()).sum();
      r(i, j) = r(j, i) = std::exp(-q);
    }
  }
  return r;
}

struct Merged {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

Merged merge_duplicates(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  std::map<std::vector<double>, std::pair<double, int>> rows;
  std::vector<std::vector<double>> order;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::vector<double> key(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index k = 0; k < x.cols(); ++k) key[static_cast<std::size_t>(k)] = x(i, k);
    auto [it, inserted] = rows.try_emplace(key, 0.0, 0);
    if (inserted) order.push_back(key);
    it->second.first += y(i);
    it->second.second += 1;
  }
  Merged m;
  m.x.resize(static_cast<Eigen::Index>(order.size()), x.cols());
  m.y.resize(static_cast<Eigen::Index>(order.size()));
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index k = 0; k < x.cols(); ++k) m.x(r, k) = order[i][static_cast<std::size_t>(k)];
    const auto& acc = rows.at(order[i]);
    m.y(r) = acc.first / acc.second;
  }
  return m;
}

TrendKind supported_trend(TrendKind requested, Eigen::Index n, Eigen::Index d) {
  // Strictly more samples than trend terms: at equality the GLS residual vanishes.
  if (requested == TrendKind::Quadratic && n > trend_size(TrendKind::Quadratic, d)) return requested;
  if (requested != TrendKind::Constant && n >= trend_size(TrendKind::Linear, d) + 1) {
    return TrendKind::Linear;
  }
  return TrendKind::Constant;
}

}  // namespace

LikelihoodValue concentrated_log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y_std,
                                            TrendKind trend, const Eigen::VectorXd& log_theta,
                                            double nugget) {
  LikelihoodValue out;
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  const Eigen::VectorXd theta = log_theta.array().exp();
  const Eigen::MatrixXd rc = correlation(x, theta);
  Eigen::MatrixXd r = rc;
  r.diagonal().array() += nugget;
  const Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() != Eigen::Success) return out;

  const Eigen::MatrixXd f = trend_matrix(trend, x);
  const Eigen::MatrixXd rinv_f = llt.solve(f);
  const Eigen::MatrixXd m = f.transpose() * rinv_f;
  const Eigen::VectorXd beta =
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(m).solve(rinv_f.transpose() * y_std);
  const Eigen::VectorXd resid = y_std - f * beta;
  const Eigen::VectorXd alpha = llt.solve(resid);
  const double sigma2 = resid.dot(alpha) / static_cast<double>(n);
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) return out;

  const Eigen::MatrixXd l = llt.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  out.value = -0.5 * static_cast<double>(n) * std::log(sigma2) - 0.5 * log_det;

  // d l / d theta_k = alpha' R_k alpha / (2 sigma2) - tr(R^-1 R_k) / 2,
  // with R_k = -(x_ik - x_jk)^2 * rc_ij.
  const Eigen::MatrixXd rinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd w =
      ((alpha * alpha.transpose()) / (2.0 * sigma2) - 0.5 * rinv).cwiseProduct(rc);
  const Eigen::VectorXd w_rowsum = w.rowwise().sum();
  const Eigen::MatrixXd wx = w * x;
  out.gradient.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const auto xk = x.col(k);
    const double weighted = 2.0 * xk.array().square().matrix().dot(w_rowsum) - 2.0 * xk.dot(wx.col(k));
    out.gradient(k) = -theta(k) * weighted;
  }
  out.ok = std::isfinite(out.value) && out.gradient.allFinite();
  return out;
}

void KrigingModel::factorize() {
  const Eigen::Index n = x_.rows();
  f_ = trend_matrix(trend_, x_);
  const Eigen::MatrixXd rc = correlation(x_, theta_);
  for (;;) {
    Eigen::MatrixXd r = rc;
    r.diagonal().array() += nugget_;
    chol_.compute(r);
    if (chol_.info() == Eigen::Success) break;
    if (nugget_ * 10.0 > kMaxNugget * (1.0 + 1e-12)) {
      throw std::runtime_error(fmt::format("correlation matrix not positive definite at nugget {}", nugget_));
    }
    nugget_ *= 10.0;
    log::warn(fmt::format("kriging: escalating nugget to {}", nugget_));
  }
  rinv_f_ = chol_.solve(f_);
  const Eigen::MatrixXd m = f_.transpose() * rinv_f_;
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(m);
  m_pinv_ = cod.pseudoInverse();
  beta_ = cod.solve(rinv_f_.transpose() * y_);
  const Eigen::VectorXd resid = y_ - f_ * beta_;
  alpha_ = chol_.solve(resid);
  sigma2_ = std::max(0.0, resid.dot(alpha_) / static_cast<double>(n));
  const Eigen::MatrixXd l = chol_.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  log_likelihood_ = sigma2_ > 0.0 ? -0.5 * static_cast<double>(n) * std::log(sigma2_) - 0.5 * log_det
                                  : std::numeric_limits<double>::infinity();
}

Prediction KrigingModel::predict(const Eigen::VectorXd& x) const {
  if (x.size() != x_.cols()) throw DomainError("prediction point has the wrong dimension");
  if (degenerate_) return {0.0, 0.0};
  const Eigen::Index n = x_.rows();
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double q = ((x_.row(i).transpose() - x).array().square() * theta_.array()).sum();
    // The nugget belongs to the kernel at zero lag, so training points are reproduced exactly.
    r(i) = q == 0.0 ? 1.0 + nugget_ : std::exp(-q);
  }
  const Eigen::VectorXd g = trend_basis(trend_, x);
  Prediction p;
  p.mean = g.dot(beta_) + r.dot(alpha_);
  const Eigen::VectorXd v = chol_.matrixL().solve(r);
  const Eigen::VectorXd u = rinv_f_.transpose() * r - g;
  const double var = sigma2_ * (1.0 - v.squaredNorm() + u.dot(m_pinv_ * u));
  p.sd = std::sqrt(std::max(0.0, var));
  return p;
}

nlohmann::json KrigingModel::to_json() const {
  nlohmann::json j;
  j["trend"] = to_string(trend_);
  j["trend_fallback"] = trend_fallback_;
  j["degenerate"] = degenerate_;
  j["nugget"] = nugget_;
  j["process_variance"] = sigma2_;
  j["response_mean"] = y_mean_;
  j["response_sd"] = y_sd_;
  j["log_likelihood"] = log_likelihood_;
  j["theta"] = std::vector<double>(theta_.data(), theta_.data() + theta_.size());
  j["beta"] = std::vector<double>(beta_.data(), beta_.data() + beta_.size());
  auto& rows = j["inputs"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < x_.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(x_.cols()));
    for (Eigen::Index k = 0; k < x_.cols(); ++k) row[static_cast<std::size_t>(k)] = x_(i, k);
    rows.push_back(row);
  }
  std::vector<double> raw(static_cast<std::size_t>(y_.size()));
  for (Eigen::Index i = 0; i < y_.size(); ++i) raw[static_cast<std::size_t>(i)] = destandardize(y_(i));
  j["responses"] = raw;
  return j;
}

KrigingModel KrigingModel::from_json(const nlohmann::json& j) {
  const auto rows = j.at("inputs").get<std::vector<std::vector<double>>>();
  const auto raw = j.at("responses").get<std::vector<double>>();
  const auto theta = j.at("theta").get<std::vector<double>>();
  if (rows.empty() || rows.size() != raw.size()) throw FormatError("kriging document: inputs/responses mismatch");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw FormatError("kriging document: ragged inputs");
    for (std::size_t k = 0; k < rows[i].size(); ++k) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(raw.data(), static_cast<Eigen::Index>(raw.size()));
  const Eigen::VectorXd th = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
  KrigingModel m = assemble_kriging(x, y, trend_from_string(j.at("trend").get<std::string>()), th,
                                    j.at("nugget").get<double>());
  m.trend_fallback_ = j.value("trend_fallback", false);
  return m;
}

KrigingModel assemble_kriging(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, TrendKind trend,
                              const Eigen::VectorXd& theta, double nugget) {
  if (x.rows() != y.size() || x.rows() < 1) throw DomainError("kriging needs one response per input row");
  if (theta.size() != x.cols()) throw DomainError("theta must have one entry per dimension");
  KrigingModel m;
  m.x_ = x;
  m.trend_ = trend;
  m.theta_ = theta;
  m.nugget_ = nugget;
  m.y_mean_ = y.mean();
  const double var = x.rows() > 1 ? (y.array() - m.y_mean_).square().sum() / static_cast<double>(x.rows() - 1) : 0.0;
  m.y_sd_ = std::sqrt(var);
  if (!(m.y_sd_ > 1e-12 * std::max(1.0, std::abs(m.y_mean_)))) {
    m.y_sd_ = 0.0;
    m.degenerate_ = true;
    m.y_ = Eigen::VectorXd::Zero(y.size());
    return m;
  }
  m.y_ = (y.array() - m.y_mean_) / m.y_sd_;
  m.factorize();
  return m;
}

KrigingModel fit_kriging(const Eigen::MatrixXd& x_in, const Eigen::VectorXd& y_in,
                         const KrigingOptions& options) {
  if (x_in.rows() != y_in.size()) throw DomainError("kriging needs one response per input row");
  const Merged data = merge_duplicates(x_in, y_in);
  const Eigen::Index n = data.x.rows();
  const Eigen::Index d = data.x.cols();
  if (n < 2) throw DomainError("kriging needs at least two distinct samples");

  const TrendKind trend = supported_trend(options.trend, n, d);
  const bool fallback = trend != options.trend;
  if (fallback) {
    log::info(fmt::format("kriging: {} samples cannot support a {} trend in {} dimensions; using {}", n,
                          to_string(options.trend), d, to_string(trend)));
  }

  const double ln10 = std::log(10.0);
  const Eigen::VectorXd lower = Eigen::VectorXd::Constant(d, options.log10_theta_min * ln10);
  const Eigen::VectorXd upper = Eigen::VectorXd::Constant(d, options.log10_theta_max * ln10);

  const double mean = data.y.mean();
  const double sd = std::sqrt((data.y.array() - mean).square().sum() / static_cast<double>(n - 1));
  if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
    KrigingModel m = assemble_kriging(data.x, data.y, trend, Eigen::VectorXd::Ones(d), options.nugget);
    m.trend_fallback_ = fallback;
    return m;
  }
  const Eigen::VectorXd y_std = (data.y.array() - mean) / sd;

  std::vector<Eigen::VectorXd> starts;
  if (options.warm_start && options.warm_start->size() == d) starts.push_back(*options.warm_start);
  else starts.push_back(0.5 * (lower + upper));
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<int>(starts.size()) < std::max(1, options.starts)) {
    Eigen::VectorXd s(d);
    for (Eigen::Index k = 0; k < d; ++k) s(k) = lower(k) + unit(rng) * (upper(k) - lower(k));
    starts.push_back(s);
  }

  for (double nugget = options.nugget; nugget <= options.max_nugget * (1.0 + 1e-12); nugget *= 10.0) {
    const ObjectiveWithGradient objective = [&](const Eigen::VectorXd& lt, Eigen::VectorXd& grad) {
      const LikelihoodValue lv = concentrated_log_likelihood(data.x, y_std, trend, lt, nugget);
      if (!lv.ok) {
        grad = Eigen::VectorXd::Zero(lt.size());
        return std::numeric_limits<double>::infinity();
      }
      grad = -lv.gradient;
      return -lv.value;
    };
    double best_value = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_log_theta;
    for (const auto& s : starts) {
      const BoxMinimizeResult r = minimize_box(objective, s, lower, upper, options.max_iterations);
      // Strict comparison keeps the lowest start index on ties.
      if (std::isfinite(r.value) && r.value < best_value) {
        best_value = r.value;
        best_log_theta = r.x;
      }
    }
    if (best_log_theta.size() == d) {
      KrigingModel m = assemble_kriging(data.x, data.y, trend, best_log_theta.array().exp(), nugget);
      m.trend_fallback_ = fallback;
      return m;
    }
    log::warn(fmt::format("kriging: no start produced a positive-definite correlation at nugget {}", nugget));
  }
  throw std::runtime_error("kriging fit failed: correlation matrix not positive definite up to the maximum nugget");
}

double expected_improvement(double mean, double sd, double f_best) {
  const double improvement = mean - f_best;
  if (!(sd > 0.0)) return std::max(0.0, improvement);
  const double z = improvement / sd;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, improvement * cdf + sd * pdf);
}

double expected_improvement(const KrigingModel& model, const Eigen::VectorXd& x, double f_best) {
  const Prediction p = model.predict(x);
  return expected_improvement(p.mean, p.sd, f_best);
}

}  // namespace wflo
