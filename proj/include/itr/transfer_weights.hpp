#pragma once

#include "itr/data.hpp"

#include <functional>
#include <string>
#include <vector>

namespace itr {

// Covariate transform entering the logistic sampling model. `squared` is the
// deliberately misspecified model logit = a0 + a1'(x.^2).
enum class ScoreFeatures { linear, squared };

std::string to_string(ScoreFeatures features);

/// Rows (1, phi(x)') for the sampling-score design.
MatrixXd score_design(ScoreFeatures features, const MatrixXd& covariates);

class SamplingScoreModel {
 public:
  SamplingScoreModel(VectorXd alpha, ScoreFeatures features, WeightMethod method);

  const VectorXd& alpha() const { return alpha_; }
  ScoreFeatures features() const { return features_; }
  WeightMethod method() const { return method_; }

  /// pi_S(x) for every row of `covariates`.
  VectorXd scores(const MatrixXd& covariates) const;

  int iterations = 0;
  double residual_norm = 0.0;  // final gradient (mle) or estimating-equation residual (ee)

 private:
  VectorXd alpha_;
  ScoreFeatures features_;
  WeightMethod method_;
};

struct ParametricOptions {
  ScoreFeatures features = ScoreFeatures::linear;
  int max_iterations = 200;
  double tolerance = 1e-8;
};

/// Modified maximum likelihood: maximizes
///   (1/N) sum_exp (a0 + a1'x) - (1/m) sum_rwd log(1 + exp(a0 + a1'x)).
SamplingScoreModel fit_sampling_mle(const ExperimentalSample& exp, const TargetSample& rwd, double population_size,
                                    const ParametricOptions& options = {});

/// Moment function g applied to a row of phi(x); must return p+1 entries.
using MomentFunction = std::function<VectorXd(const VectorXd&)>;

/// Solves (1/N) sum_exp g(x)/pi_S(x; a) = (1/m) sum_rwd g(x). Default g(x) = (1, phi(x)').
SamplingScoreModel fit_sampling_ee(const ExperimentalSample& exp, const TargetSample& rwd, double population_size,
                                   const MomentFunction& g = {}, const ParametricOptions& options = {});

/// Sum-to-one normalized inverse scores; scores below 1e-12 are clipped and counted.
TransferWeights weights_from_score(const SamplingScoreModel& model, const ExperimentalSample& exp);

// ---------------------------------------------------------------------------
// Nonparametric (constrained minimal-entropy) weights

struct BalanceFeature {
  std::string name;
  std::function<double(const Eigen::Ref<const VectorXd>&)> eval;
};

struct BalanceConstraints {
  std::vector<BalanceFeature> features;
  VectorXd tolerances;  // sigma_k >= 0, one per feature

  /// x_j, x_j^2, ..., x_j^order for each covariate; tolerances zero.
  static BalanceConstraints moments(const std::vector<std::string>& names, int order = 2);

  BalanceConstraints with_tolerances(VectorXd sigma) const;
  Index size() const { return static_cast<Index>(features.size()); }
  MatrixXd evaluate(const MatrixXd& covariates) const;
};

struct BalanceRow {
  std::string feature;
  double weighted_mean = 0.0;
  double target = 0.0;
  double imbalance = 0.0;  // |weighted_mean - target|
  double violation = 0.0;  // max(0, imbalance - tolerance)
  double tolerance = 0.0;
};

struct EntropyBalanceFit {
  TransferWeights weights;
  VectorXd lambda;  // dual solution on the standardized feature scale
  std::vector<BalanceRow> balance;
  double entropy = 0.0;  // sum w log w
  double duality_gap = 0.0;
  int iterations = 0;
  std::vector<std::string> notices;
};

/// Minimizes sum w log w over the simplex subject to
///   |sum_i w_i g_k(x_i) - mean_rwd g_k| <= sigma_k  for every k,
/// via the dual  min_l  log sum_i exp(l'g_i) - l'c + sum_k sigma_k |l_k|.
/// Throws itr::Error (infeasible) naming the most violated feature.
EntropyBalanceFit fit_weights_nonparametric(const ExperimentalSample& exp, const TargetSample& rwd,
                                            const BalanceConstraints& constraints);

struct ToleranceSearch {
  std::vector<double> deltas{0.0, 0.25, 0.5, 1.0};
  double max_standardized_imbalance = 0.1;
  int moment_order = 2;
};

struct TunedBalanceFit {
  EntropyBalanceFit fit;
  double delta = 0.0;
  double ess = 0.0;
};

/// sigma_k = delta * sd_rwd(g_k) / sqrt(n) over the delta grid; picks the largest
/// effective sample size among fits whose standardized imbalances are all within bound.
TunedBalanceFit fit_weights_nonparametric_tuned(const ExperimentalSample& exp, const TargetSample& rwd,
                                                const ToleranceSearch& search = {});

/// Kish effective sample size (sum w)^2 / sum w^2.
double effective_sample_size(const TransferWeights& w);

}  // namespace itr
