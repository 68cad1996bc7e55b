#pragma once

#include "itr/data.hpp"

#include <string>

namespace itr {

inline constexpr double kPropensityFloor = 1e-6;

enum class PropensityMode { constant, logistic };

std::string to_string(PropensityMode mode);
PropensityMode propensity_mode_from_string(const std::string& name);

struct PropensityModel {
  PropensityMode mode = PropensityMode::constant;
  double constant = 0.5;
  VectorXd gamma;  // logistic coefficients over (1, x')

  /// P(A = 1 | x), clipped to [1e-6, 1 - 1e-6]. `clipped` is set when clipping applied.
  double probability(const Eigen::Ref<const VectorXd>& x, bool* clipped = nullptr) const;
};

struct OutcomeModel {
  VectorXd beta;  // over L(x, a) = (1, x', a, a x')

  double predict(const Eigen::Ref<const VectorXd>& x, double a) const;
};

struct NuisanceFit {
  OutcomeModel outcome;
  PropensityModel propensity;
  WeightMethod weights_method = WeightMethod::uniform;
  int clipped = 0;  // rows whose propensity was clipped during contrast/value evaluation

  double q(const Eigen::Ref<const VectorXd>& x, double a) const { return outcome.predict(x, a); }
};

/// Design rows L_i = (1, x_i', a_i, a_i x_i').
MatrixXd q_design(const MatrixXd& covariates, const VectorXd& treatment);
std::vector<std::string> q_design_names(const std::vector<std::string>& covariate_names);

/// argmin_b sum_i w_i (y_i - b'd_i)^2 by column-pivoted QR on sqrt(w)-scaled rows.
/// Throws itr::Error (schema, "rank-deficient") naming the collinear columns.
VectorXd weighted_least_squares(const MatrixXd& design, const VectorXd& y, const VectorXd& w,
                                const std::vector<std::string>& column_names = {});

OutcomeModel fit_q_weighted(const ExperimentalSample& exp, const TransferWeights& w);

/// constant: sum w A / sum w.  logistic: weighted maximum likelihood over (1, x').
PropensityModel fit_propensity(const ExperimentalSample& exp, const TransferWeights& w, PropensityMode mode);

struct NuisanceOptions {
  PropensityMode propensity = PropensityMode::constant;
  // When false the propensity is fitted with uniform weights (plain n^-1 sum A in constant mode).
  bool weighted_propensity = true;
};

NuisanceFit fit_nuisance(const ExperimentalSample& exp, const TransferWeights& w, const NuisanceOptions& options = {});

enum class ContrastEstimator { aipw, regression, ipw, truth };

std::string to_string(ContrastEstimator estimator);

struct ContrastEstimates {
  VectorXd tau;
  ContrastEstimator estimator = ContrastEstimator::aipw;
  bool weighted = false;
};

/// Per-row AIPW contrast
///   [A(Y - Q1)/pi + Q1] - [(1 - A)(Y - Q0)/(1 - pi) + Q0].
ContrastEstimates contrast_aipw(const ExperimentalSample& exp, NuisanceFit& fit);
ContrastEstimates contrast_aipw(const ExperimentalSample& exp, const NuisanceFit& fit);

/// Q1 - Q0 per row.
ContrastEstimates contrast_regression(const ExperimentalSample& exp, const NuisanceFit& fit);

/// A Y / pi - (1 - A) Y / (1 - pi) per row.
ContrastEstimates contrast_ipw(const ExperimentalSample& exp, const NuisanceFit& fit);

}  // namespace itr
