#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

namespace wflo {

enum class TrendKind { Constant, Linear, Quadratic };

std::string to_string(TrendKind kind);
TrendKind trend_from_string(const std::string& name);

/// Number of trend terms for `kind` in `dim` dimensions.
Eigen::Index trend_size(TrendKind kind, Eigen::Index dim);
/// g(x): 1, x_i, then x_i * x_j for i <= j (quadratic only).
Eigen::VectorXd trend_basis(TrendKind kind, const Eigen::VectorXd& x);

struct KrigingOptions {
  TrendKind trend = TrendKind::Quadratic;
  double nugget = 1e-8;
  double max_nugget = 1e-6;
  int starts = 8;
  int max_iterations = 60;
  double log10_theta_min = -2.0;
  double log10_theta_max = 2.0;
  std::uint64_t seed = 0;
  /// Used as the first start when present (length d, natural log of theta).
  std::optional<Eigen::VectorXd> warm_start;
};

struct Prediction {
  double mean = 0.0;
  double sd = 0.0;
};

/// Universal Kriging with a polynomial trend and anisotropic Gaussian
/// correlation r(a, b) = exp(-sum_k theta_k (a_k - b_k)^2).
///
/// Responses are standardized to zero mean and unit variance at fit time;
/// predict() and expected_improvement() work on that standardized scale.
class KrigingModel {
 public:
  Prediction predict(const Eigen::VectorXd& x) const;

  double standardize(double y) const { return y_sd_ > 0.0 ? (y - y_mean_) / y_sd_ : 0.0; }
  double destandardize(double z) const { return y_mean_ + y_sd_ * z; }

  Eigen::Index dimension() const { return x_.cols(); }
  Eigen::Index sample_count() const { return x_.rows(); }
  TrendKind trend() const { return trend_; }
  bool trend_fallback() const { return trend_fallback_; }
  bool degenerate() const { return degenerate_; }
  const Eigen::VectorXd& theta() const { return theta_; }
  const Eigen::VectorXd& beta() const { return beta_; }
  double process_variance() const { return sigma2_; }
  double nugget() const { return nugget_; }
  double log_likelihood() const { return log_likelihood_; }
  double response_mean() const { return y_mean_; }
  double response_sd() const { return y_sd_; }
  const Eigen::MatrixXd& inputs() const { return x_; }
  /// Standardized training responses.
  const Eigen::VectorXd& responses() const { return y_; }
  /// Largest standardized training response.
  double best_response() const { return y_.size() > 0 ? y_.maxCoeff() : 0.0; }

  nlohmann::json to_json() const;
  /// Rebuilds the factorization from stored inputs and hyperparameters.
  static KrigingModel from_json(const nlohmann::json& j);

 private:
  friend KrigingModel fit_kriging(const Eigen::MatrixXd&, const Eigen::VectorXd&, const KrigingOptions&);
  friend KrigingModel assemble_kriging(const Eigen::MatrixXd&, const Eigen::VectorXd&, TrendKind,
                                       const Eigen::VectorXd&, double);
  void factorize();

  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  double y_mean_ = 0.0;
  double y_sd_ = 0.0;
  TrendKind trend_ = TrendKind::Constant;
  bool trend_fallback_ = false;
  bool degenerate_ = false;
  Eigen::VectorXd theta_;
  double nugget_ = 1e-8;
  double sigma2_ = 0.0;
  double log_likelihood_ = 0.0;

  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::MatrixXd f_;          // trend matrix, n x p
  Eigen::MatrixXd rinv_f_;     // R^-1 F
  Eigen::MatrixXd m_pinv_;     // (F^T R^-1 F)^+
  Eigen::VectorXd beta_;
  Eigen::VectorXd alpha_;      // R^-1 (y - F beta)
};

/// Builds a model at fixed hyperparameters; `y` is on the raw scale.
/// Escalates the nugget by x10 up to 1e-6 if R is not positive definite.
KrigingModel assemble_kriging(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, TrendKind trend,
                              const Eigen::VectorXd& theta, double nugget);

/// Maximum-likelihood fit: multi-start projected L-BFGS over log theta.
/// Duplicate rows are merged (responses averaged). A quadratic trend that
/// the sample count cannot support falls back to linear, then constant.
KrigingModel fit_kriging(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const KrigingOptions& options = {});

struct LikelihoodValue {
  double value = 0.0;
  Eigen::VectorXd gradient;  // d value / d log theta
  bool ok = false;
};

/// Concentrated log-likelihood -n/2 log(sigma2_hat) - 1/2 log|R| of
/// standardized responses, with its gradient in log theta.
LikelihoodValue concentrated_log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y_std,
                                            TrendKind trend, const Eigen::VectorXd& log_theta,
                                            double nugget);

/// EI for maximization given a predictive mean and sd.
double expected_improvement(double mean, double sd, double f_best);
double expected_improvement(const KrigingModel& model, const Eigen::VectorXd& x, double f_best);

}  // namespace wflo
