#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "wflo/farm_model.hpp"
#include "wflo/orthopoly.hpp"
#include "wflo/wind_resource.hpp"

namespace wflo {

/// Affine map of a physical interval onto [-1, 1]. A degenerate interval maps to 0.
struct Standardizer {
  double lower = -1.0;
  double upper = 1.0;

  double operator()(double v) const {
    if (!(upper > lower)) return 0.0;
    return 2.0 * (v - lower) / (upper - lower) - 1.0;
  }
};

struct MultiIndex {
  int direction = 0;
  int speed = 0;
  int total() const { return direction + speed; }
  bool operator==(const MultiIndex&) const = default;
};

inline std::size_t total_degree_count(int order) {
  return static_cast<std::size_t>(order + 1) * static_cast<std::size_t>(order + 2) / 2;
}

/// Products phi_i(xi_1) * phi_j(xi_2) over the total-degree set i + j <= order,
/// clipped to what each 1-D basis supports. Graded ordering; (0,0) first.
class TensorBasis {
 public:
  TensorBasis(const OrthoBasis1D& direction, const OrthoBasis1D& speed, int order);

  std::size_t size() const { return indices_.size(); }
  int order() const { return order_; }
  const std::vector<MultiIndex>& indices() const { return indices_; }
  double evaluate(std::size_t i, double xi1, double xi2) const;
  Eigen::RowVectorXd evaluate_all(double xi1, double xi2) const;

 private:
  OrthoBasis1D direction_;
  OrthoBasis1D speed_;
  int order_;
  std::vector<MultiIndex> indices_;
};

TensorBasis tensor_basis(const OrthoBasis1D& direction, const OrthoBasis1D& speed, int order);

struct PceModel {
  std::vector<MultiIndex> indices;
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd samples;    // m x 2, standardized (xi_1, xi_2)
  Eigen::VectorXd responses;  // m
  int order = 0;
  double cv_rmse = 0.0;
  double residual_norm = 0.0;
  int rank = 0;
  bool rank_deficient = false;
  std::uint64_t seed = 0;

  /// Expected response under the basis measure.
  double mean() const { return coefficients.size() > 0 ? coefficients(0) : 0.0; }
  double evaluate(const TensorBasis& basis, double xi1, double xi2) const;
  nlohmann::json to_json() const;
};

/// Least-squares fit of `responses` on the tensor basis of the given order.
/// `samples` rows are standardized (xi_1, xi_2).
PceModel fit_pce(const Eigen::MatrixXd& samples, const Eigen::VectorXd& responses,
                 const OrthoBasis1D& direction, const OrthoBasis1D& speed, int order);

struct OrderSelection {
  int order = 0;
  std::vector<double> rmse_by_order;  // index = order; NaN when not admissible
};

/// k-fold cross-validated total order in [1, max_order]. Orders whose
/// coefficient count exceeds the smallest training fold are skipped; near-ties
/// go to the lower order. Returns order 0 when no order >= 1 is admissible.
OrderSelection select_order(const Eigen::MatrixXd& samples, const Eigen::VectorXd& responses,
                            const OrthoBasis1D& direction, const OrthoBasis1D& speed, int k_folds,
                            int max_order = 10);

/// Bases and coordinate maps derived from a wind rose's binned masses.
struct WindRoseBases {
  Standardizer direction_map;
  Standardizer speed_map;
  OrthoBasis1D direction;
  OrthoBasis1D speed;
};

WindRoseBases wind_rose_bases(const WindRose& rose, int max_degree);

struct PceOptions {
  int max_order = 10;
  int k_folds = 5;
  int threads = 1;
};

struct PceAepResult {
  double aep_wh = 0.0;
  PceModel model;
  std::size_t farm_power_calls = 0;
};

/// Samples the rose, evaluates farm power at each condition, fits the
/// expansion and returns 8760 * alpha_0.
PceAepResult estimate_aep(const Layout& layout, const WindRose& rose, std::size_t n_samples,
                          std::uint64_t seed, const TurbineSpec& spec, const WakeParams& wp,
                          const PceOptions& options = {});

/// Same as above with bases prepared once for repeated layouts.
PceAepResult estimate_aep(const Layout& layout, const WindRose& rose, const WindRoseBases& bases,
                          std::size_t n_samples, std::uint64_t seed, const TurbineSpec& spec,
                          const WakeParams& wp, const PceOptions& options = {});

}  // namespace wflo
