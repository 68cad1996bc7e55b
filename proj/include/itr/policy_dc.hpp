#pragma once

#include "itr/data.hpp"
#include "itr/nuisance.hpp"
#include "itr/optim.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace itr {

struct RampLossParams {
  double zeta1 = 1.0;
  double zeta2 = 1.0;

  void validate() const;
};

/// l(u): 0 for u >= 1, (1-u)^2 on [0,1), 2-(1+u)^2 on [-1,0), 2 below -1; general form l(zeta1 u)/zeta2.
double ramp_loss(double u, const RampLossParams& params = {});

/// Convex pieces with l = l_1 - l_0.
double ramp_component(double u, int s);
double ramp_component_derivative(double u, int s);

/// 1{eta0 + eta1'x > 0}.
int predict(const LinearRule& rule, const Eigen::Ref<const VectorXd>& x);

// Multiplier applied to sum_i w_i |tau_i| loss(u_i): 1 for sum-to-one weights, 1/n otherwise.
double risk_scale(WeightScale scale, Index n);

struct RiskLoss {
  enum class Kind { zero_one, ramp } kind = Kind::zero_one;
  RampLossParams ramp{};

  static RiskLoss zero_one() { return {}; }
  static RiskLoss smoothed(RampLossParams p = {}) { return {Kind::ramp, p}; }
};

/// scale * sum_i w_i |tau_i| loss(y_i f(x_i)), y_i = 2*1{tau_i > 0} - 1. The 0-1 form counts
/// rows where predict(rule, x_i) != 1{tau_i > 0}.
double empirical_risk(const LinearRule& rule, const MatrixXd& covariates, const VectorXd& weights, double scale,
                      const VectorXd& tau, const RiskLoss& loss);
double empirical_risk(const LinearRule& rule, const ExperimentalSample& exp, const TransferWeights& w,
                      const ContrastEstimates& tau, const RiskLoss& loss);

struct DcOptions {
  RampLossParams ramp{};
  double tolerance = 1e-6;  // sup-norm change of xi
  int max_outer = 200;
  optim::LbfgsOptions inner{};
  // fixed: xi^(0) = 2 o z1 / z2 (the l_0 slope below -1).  from_init: linearize l_0 at the start.
  enum class XiStart { fixed, from_init } xi_start = XiStart::fixed;
};

struct InnerFailure {
  int outer_iteration = 0;
  std::string status;
};

struct DcFitReport {
  LinearRule rule;      // canonicalized
  VectorXd eta_raw;     // final iterate before canonicalization
  std::vector<double> objective_trace;  // ramp objective at eta^(t), t = 1, 2, ...
  std::vector<int> inner_iterations;
  std::vector<InnerFailure> inner_failures;
  bool converged = false;
  bool degenerate = false;
  double xi_change = 0.0;
  double objective = 0.0;
  double scale = 1.0;
};

/// d.c. iterations: solve min_eta scale*sum_i [o_i l_1(z1 u_i)/z2 + xi_i u_i] from a warm start,
/// then xi_i = -o_i z1 l_0'(z1 u_i)/z2, with o_i = w_i |tau_i| and xi^(0) = 2 o z1 / z2.
DcFitReport dc_fit(const MatrixXd& covariates, const VectorXd& weights, double scale, const VectorXd& tau,
                   const LinearRule& init, const DcOptions& options = {});
DcFitReport dc_fit(const ExperimentalSample& exp, const TransferWeights& w, const ContrastEstimates& tau,
                   const LinearRule& init, const DcOptions& options = {});

struct MultiStartOptions {
  int random_starts = 5;
  bool wls_start = true;
  bool anneal = false;  // zeta1 over {1, 2, 4}
  std::vector<double> start_scales{1.0, 10.0, 100.0};  // random start k is scaled by entry k mod size
  std::uint64_t seed = 1;
  DcOptions dc = warm_dc_options();

  static DcOptions warm_dc_options() {
    DcOptions o;
    o.xi_start = DcOptions::XiStart::from_init;
    return o;
  }
};

struct MultiStartReport {
  DcFitReport best;
  int best_start = 0;
  std::vector<double> start_objectives;
};

/// Random N(0, I) starts plus a start from the weighted least-squares fit of tau on (1, x).
/// Lowest final ramp objective wins; near-ties go to the smaller ||eta||.
MultiStartReport fit_rule_multistart(const MatrixXd& covariates, const VectorXd& weights, double scale,
                                     const VectorXd& tau, const MultiStartOptions& options = {});
MultiStartReport fit_rule_multistart(const ExperimentalSample& exp, const TransferWeights& w,
                                     const ContrastEstimates& tau, const MultiStartOptions& options = {});

struct LearnOptions {
  NuisanceOptions nuisance{};
  ContrastEstimator contrast = ContrastEstimator::aipw;
  MultiStartOptions policy{};
};

struct LearnedRule {
  LinearRule rule;
  NuisanceFit nuisance;
  ContrastEstimates tau;
  MultiStartReport fit;
};

/// Nuisances fitted with `w`, per-row contrasts, then the multi-start d.c. fit with `w`.
LearnedRule learn_rule(const ExperimentalSample& exp, const TransferWeights& w, const LearnOptions& options = {});

}  // namespace itr
