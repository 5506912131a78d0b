#include "wflo/pce.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "wflo/errors.hpp"
#include "wflo/log.hpp"
#include "wflo/parallel.hpp"

namespace wflo {

TensorBasis::TensorBasis(const OrthoBasis1D& direction, const OrthoBasis1D& speed, int order)
    : direction_(direction), speed_(speed), order_(order) {
  if (order < 0) throw DomainError("expansion order must be non-negative");
  for (int t = 0; t <= order; ++t) {
    for (int i = t; i >= 0; --i) {
      const int j = t - i;
      if (i <= direction.degree() && j <= speed.degree()) indices_.push_back({i, j});
    }
  }
}

double TensorBasis::evaluate(std::size_t i, double xi1, double xi2) const {
  const MultiIndex& idx = indices_.at(i);
  return direction_.evaluate(idx.direction, xi1) * speed_.evaluate(idx.speed, xi2);
}

Eigen::RowVectorXd TensorBasis::evaluate_all(double xi1, double xi2) const {
  const Eigen::VectorXd a = direction_.evaluate_all(xi1);
  const Eigen::VectorXd b = speed_.evaluate_all(xi2);
  Eigen::RowVectorXd out(static_cast<Eigen::Index>(indices_.size()));
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = a(indices_[i].direction) * b(indices_[i].speed);
  }
  return out;
}

TensorBasis tensor_basis(const OrthoBasis1D& direction, const OrthoBasis1D& speed, int order) {
  return TensorBasis(direction, speed, order);
}

double PceModel::evaluate(const TensorBasis& basis, double xi1, double xi2) const {
  return basis.evaluate_all(xi1, xi2).dot(coefficients);
}

nlohmann::json PceModel::to_json() const {
  nlohmann::json j;
  j["order"] = order;
  j["seed"] = seed;
  j["cv_rmse"] = cv_rmse;
  j["residual_norm"] = residual_norm;
  j["rank"] = rank;
  j["rank_deficient"] = rank_deficient;
  auto& terms = j["terms"] = nlohmann::json::array();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    terms.push_back({{"direction_degree", indices[i].direction},
                     {"speed_degree", indices[i].speed},
                     {"coefficient", coefficients(static_cast<Eigen::Index>(i))}});
  }
  return j;
}

namespace {

Eigen::MatrixXd design_matrix(const TensorBasis& basis, const Eigen::MatrixXd& samples) {
  Eigen::MatrixXd phi(samples.rows(), static_cast<Eigen::Index>(basis.size()));
  for (Eigen::Index r = 0; r < samples.rows(); ++r) phi.row(r) = basis.evaluate_all(samples(r, 0), samples(r, 1));
  return phi;
}

}  // namespace

PceModel fit_pce(const Eigen::MatrixXd& samples, const Eigen::VectorXd& responses,
                 const OrthoBasis1D& direction, const OrthoBasis1D& speed, int order) {
  if (samples.cols() != 2 || samples.rows() != responses.size()) {
    throw DomainError("samples must be m x 2 with one response per row");
  }
  const TensorBasis basis(direction, speed, order);
  if (static_cast<std::size_t>(samples.rows()) < basis.size()) {
    throw DomainError(fmt::format("{} samples cannot determine {} coefficients", samples.rows(), basis.size()));
  }
  const Eigen::MatrixXd phi = design_matrix(basis, samples);
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(phi);

  PceModel model;
  model.indices = basis.indices();
  model.coefficients = cod.solve(responses);
  model.samples = samples;
  model.responses = responses;
  model.order = order;
  model.rank = static_cast<int>(cod.rank());
  model.rank_deficient = cod.rank() < phi.cols();
  model.residual_norm = (phi * model.coefficients - responses).norm();
  if (model.rank_deficient) {
    log::warn(fmt::format("expansion design matrix rank {} < {} terms; using minimum-norm solution",
                          cod.rank(), phi.cols()));
  }
  return model;
}

OrderSelection select_order(const Eigen::MatrixXd& samples, const Eigen::VectorXd& responses,
                            const OrthoBasis1D& direction, const OrthoBasis1D& speed, int k_folds,
                            int max_order) {
  const Eigen::Index m = samples.rows();
  if (k_folds < 2) throw DomainError("cross-validation needs at least two folds");
  if (m < k_folds) throw DomainError("fewer samples than folds");
  max_order = std::clamp(max_order, 0, 10);

  // Fold f holds rows r with r % k == f; the smallest training set is m - ceil(m / k).
  const Eigen::Index min_train = m - (m + k_folds - 1) / k_folds;
  OrderSelection sel;
  sel.rmse_by_order.assign(static_cast<std::size_t>(max_order) + 1,
                           std::numeric_limits<double>::quiet_NaN());

  const double scale = std::sqrt(responses.squaredNorm() / static_cast<double>(m));
  double best = std::numeric_limits<double>::infinity();
  for (int order = 1; order <= max_order; ++order) {
    const TensorBasis basis(direction, speed, order);
    if (static_cast<Eigen::Index>(basis.size()) > min_train) break;
    if (order > 1 && basis.size() == TensorBasis(direction, speed, order - 1).size()) break;
    const Eigen::MatrixXd phi = design_matrix(basis, samples);
    double rmse = 0.0;
    for (int f = 0; f < k_folds; ++f) {
      std::vector<Eigen::Index> train;
      std::vector<Eigen::Index> test;
      for (Eigen::Index r = 0; r < m; ++r) (r % k_folds == f ? test : train).push_back(r);
      const Eigen::MatrixXd a = phi(train, Eigen::all);
      const Eigen::VectorXd b = responses(train);
      const Eigen::VectorXd coef = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(a).solve(b);
      rmse += std::sqrt((phi(test, Eigen::all) * coef - responses(test)).squaredNorm() /
                        static_cast<double>(test.size()));
    }
    rmse /= static_cast<double>(k_folds);
    sel.rmse_by_order[static_cast<std::size_t>(order)] = rmse;
    best = std::min(best, rmse);
  }
  const double tie = 1e-8 * std::max(scale, std::numeric_limits<double>::min());
  for (int order = 1; order <= max_order; ++order) {
    const double r = sel.rmse_by_order[static_cast<std::size_t>(order)];
    if (!std::isnan(r) && r <= best + tie) {
      sel.order = order;
      break;
    }
  }
  return sel;
}

WindRoseBases wind_rose_bases(const WindRose& rose, int max_degree) {
  WindRoseBases out;
  out.direction_map = {rose.direction_lower(), rose.direction_lower() + 360.0};
  if (rose.speed().mode == SpeedMode::Constant) {
    out.speed_map = {rose.speed().constant_ms, rose.speed().constant_ms};
  } else {
    out.speed_map = {rose.speed().lower_ms, rose.speed().upper_ms};
  }

  DiscreteMeasure dir;
  for (std::size_t j = 0; j < rose.direction_count(); ++j) {
    dir.points.push_back(out.direction_map(rose.direction_centers()[j]));
    dir.weights.push_back(rose.direction_frequencies()[j]);
  }
  DiscreteMeasure spd;
  for (std::size_t k = 0; k < rose.speed_count(); ++k) {
    spd.points.push_back(out.speed_map(rose.speed_values()[k]));
    spd.weights.push_back(rose.speed_probabilities()[k]);
  }
  const auto cap = [max_degree](const DiscreteMeasure& mu) {
    return std::min<int>(max_degree, static_cast<int>(mu.support_size()) - 1);
  };
  out.direction = build_basis(dir, cap(dir));
  out.speed = build_basis(spd, cap(spd));
  return out;
}

PceAepResult estimate_aep(const Layout& layout, const WindRose& rose, std::size_t n_samples,
                          std::uint64_t seed, const TurbineSpec& spec, const WakeParams& wp,
                          const PceOptions& options) {
  return estimate_aep(layout, rose, wind_rose_bases(rose, options.max_order), n_samples, seed, spec,
                      wp, options);
}

PceAepResult estimate_aep(const Layout& layout, const WindRose& rose, const WindRoseBases& bases,
                          std::size_t n_samples, std::uint64_t seed, const TurbineSpec& spec,
                          const WakeParams& wp, const PceOptions& options) {
  if (n_samples < 2) throw DomainError("estimate_aep needs at least two samples");
  const ConditionSample sample = sample_conditions(rose, n_samples, seed);
  const auto m = static_cast<Eigen::Index>(n_samples);
  Eigen::MatrixXd xi(m, 2);
  Eigen::VectorXd power(m);
  parallel_for(n_samples, options.threads, [&](std::size_t i) {
    const WindCondition& c = sample.conditions[i];
    const auto r = static_cast<Eigen::Index>(i);
    xi(r, 0) = bases.direction_map(rose.direction_coordinate(c.direction_deg));
    xi(r, 1) = bases.speed_map(c.speed_ms);
    power(r) = farm_power(layout, c, spec, wp).total_w;
  });

  const int folds = std::min<int>(options.k_folds, static_cast<int>(n_samples));
  const OrderSelection sel = select_order(xi, power, bases.direction, bases.speed, folds, options.max_order);
  PceAepResult out;
  out.model = fit_pce(xi, power, bases.direction, bases.speed, sel.order);
  out.model.cv_rmse = sel.order > 0 ? sel.rmse_by_order[static_cast<std::size_t>(sel.order)] : 0.0;
  out.model.seed = seed;
  out.aep_wh = kHoursPerYear * out.model.mean();
  out.farm_power_calls = n_samples;
  return out;
}

}  // namespace wflo
