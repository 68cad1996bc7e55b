#include "itr/policy_dc.hpp"

#include "itr/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace itr {

void RampLossParams::validate() const {
  if (!(zeta1 > 0.0) || !(zeta2 > 0.0) || !std::isfinite(zeta1) || !std::isfinite(zeta2)) {
    throw Error(ErrorKind::invalid_argument, "invalid-ramp", "ramp loss parameters must be positive and finite");
  }
}

double ramp_loss(double u, const RampLossParams& params) {
  const double v = params.zeta1 * u;
  double l;
  if (v >= 1.0) {
    l = 0.0;
  } else if (v >= 0.0) {
    l = (1.0 - v) * (1.0 - v);
  } else if (v >= -1.0) {
    l = 2.0 - (1.0 + v) * (1.0 + v);
  } else {
    l = 2.0;
  }
  return l / params.zeta2;
}

double ramp_component(double u, int s) {
  const double sd = s;
  if (u >= sd) return 0.0;
  if (u >= sd - 1.0) return (sd - u) * (sd - u);
  return 2.0 * sd - 2.0 * u - 1.0;
}

double ramp_component_derivative(double u, int s) {
  const double sd = s;
  if (u >= sd) return 0.0;
  if (u >= sd - 1.0) return -2.0 * (sd - u);
  return -2.0;
}

int predict(const LinearRule& rule, const Eigen::Ref<const VectorXd>& x) { return rule.score(x) > 0.0 ? 1 : 0; }

double risk_scale(WeightScale scale, Index n) {
  return scale == WeightScale::sum_to_one ? 1.0 : 1.0 / static_cast<double>(n);
}

namespace {

void check_lengths(const MatrixXd& covariates, const VectorXd& weights, const VectorXd& tau) {
  if (covariates.rows() != weights.size() || covariates.rows() != tau.size()) {
    throw Error(ErrorKind::invalid_argument, "length-mismatch", "covariates, weights and contrasts differ in length");
  }
}

MatrixXd augmented(const MatrixXd& covariates) {
  MatrixXd z(covariates.rows(), covariates.cols() + 1);
  z.col(0).setOnes();
  z.rightCols(covariates.cols()) = covariates;
  return z;
}

double ramp_objective(const VectorXd& margins, const VectorXd& omega, double scale, const RampLossParams& p) {
  double total = 0.0;
  for (Index i = 0; i < margins.size(); ++i) {
    if (omega[i] != 0.0) total += omega[i] * ramp_loss(margins[i], p);
  }
  return scale * total;
}

}  // namespace

double empirical_risk(const LinearRule& rule, const MatrixXd& covariates, const VectorXd& weights, double scale,
                      const VectorXd& tau, const RiskLoss& loss) {
  check_lengths(covariates, weights, tau);
  if (rule.dim() != covariates.cols()) {
    throw Error(ErrorKind::invalid_argument, "dimension-mismatch", "rule and covariates disagree in p");
  }
  double total = 0.0;
  for (Index i = 0; i < covariates.rows(); ++i) {
    const double omega = weights[i] * std::abs(tau[i]);
    if (omega == 0.0) continue;
    const double f = rule.score(covariates.row(i).transpose());
    if (loss.kind == RiskLoss::Kind::zero_one) {
      const int label = tau[i] > 0.0 ? 1 : 0;
      if ((f > 0.0 ? 1 : 0) != label) total += omega;
    } else {
      const double y = tau[i] > 0.0 ? 1.0 : -1.0;
      total += omega * ramp_loss(y * f, loss.ramp);
    }
  }
  return scale * total;
}

double empirical_risk(const LinearRule& rule, const ExperimentalSample& exp, const TransferWeights& w,
                      const ContrastEstimates& tau, const RiskLoss& loss) {
  return empirical_risk(rule, exp.covariates(), w.values(), risk_scale(w.scale(), exp.size()), tau.tau, loss);
}

DcFitReport dc_fit(const MatrixXd& covariates, const VectorXd& weights, double scale, const VectorXd& tau,
                   const LinearRule& init, const DcOptions& options) {
  check_lengths(covariates, weights, tau);
  options.ramp.validate();
  if (init.dim() != covariates.cols()) {
    throw Error(ErrorKind::invalid_argument, "dimension-mismatch", "initial rule and covariates disagree in p");
  }
  const Index n = covariates.rows();
  const double z1 = options.ramp.zeta1, z2 = options.ramp.zeta2;

  DcFitReport report;
  report.scale = scale;
  const VectorXd omega = weights.cwiseProduct(tau.cwiseAbs());
  if (!omega.allFinite() || (omega.array() < 0.0).any()) {
    throw Error(ErrorKind::invalid_argument, "invalid-weights", "weights and contrasts must be finite");
  }
  if (omega.maxCoeff() == 0.0) {
    report.rule = init.canonical();
    report.eta_raw = init.eta();
    report.degenerate = true;
    report.converged = true;
    return report;
  }

  // Rows enter only through y_i * (1, x_i'), so fold the label into the design.
  MatrixXd z = augmented(covariates);
  for (Index i = 0; i < n; ++i) {
    if (!(tau[i] > 0.0)) z.row(i) *= -1.0;
  }

  VectorXd xi = (2.0 * z1 / z2) * omega;
  VectorXd eta = init.eta();
  VectorXd u(n), coef(n);
  if (options.xi_start == DcOptions::XiStart::from_init) {
    u.noalias() = z * eta;
    for (Index i = 0; i < n; ++i) xi[i] = -omega[i] * z1 * ramp_component_derivative(z1 * u[i], 0) / z2;
  }

  const auto subproblem = [&](const VectorXd& e, VectorXd& grad) {
    u.noalias() = z * e;
    double value = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double v = z1 * u[i];
      value += omega[i] * ramp_component(v, 1) / z2 + xi[i] * u[i];
      coef[i] = omega[i] * z1 * ramp_component_derivative(v, 1) / z2 + xi[i];
    }
    grad.noalias() = scale * (z.transpose() * coef);
    return scale * value;
  };

  for (int t = 0; t < options.max_outer; ++t) {
    const auto res = optim::minimize_lbfgs(subproblem, eta, options.inner);
    report.inner_iterations.push_back(res.iterations);
    if (res.status != optim::Status::converged) {
      report.inner_failures.push_back({t + 1, optim::to_string(res.status)});
    }
    eta = res.x;
    u.noalias() = z * eta;
    report.objective_trace.push_back(ramp_objective(u, omega, scale, options.ramp));

    double change = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double next = -omega[i] * z1 * ramp_component_derivative(z1 * u[i], 0) / z2;
      change = std::max(change, std::abs(next - xi[i]));
      xi[i] = next;
    }
    report.xi_change = change;
    if (change <= options.tolerance) {
      report.converged = true;
      break;
    }
  }
  report.eta_raw = eta;
  report.rule = LinearRule(eta).canonical();
  report.objective = report.objective_trace.back();
  return report;
}

DcFitReport dc_fit(const ExperimentalSample& exp, const TransferWeights& w, const ContrastEstimates& tau,
                   const LinearRule& init, const DcOptions& options) {
  return dc_fit(exp.covariates(), w.values(), risk_scale(w.scale(), exp.size()), tau.tau, init, options);
}

namespace {

DcFitReport run_start(const MatrixXd& covariates, const VectorXd& weights, double scale, const VectorXd& tau,
                      const LinearRule& init, const MultiStartOptions& options) {
  if (!options.anneal) return dc_fit(covariates, weights, scale, tau, init, options.dc);
  DcOptions opts = options.dc;
  LinearRule start = init;
  DcFitReport rep;
  for (double z1 : {1.0, 2.0, 4.0}) {
    opts.ramp.zeta1 = options.dc.ramp.zeta1 * z1;
    rep = dc_fit(covariates, weights, scale, tau, start, opts);
    start = LinearRule(rep.eta_raw);
  }
  return rep;
}

bool better(const DcFitReport& a, const DcFitReport& b) {
  const double slack = 1e-12 * (1.0 + std::abs(b.objective));
  if (a.objective < b.objective - slack) return true;
  if (a.objective > b.objective + slack) return false;
  return a.eta_raw.norm() < b.eta_raw.norm();
}

}  // namespace

MultiStartReport fit_rule_multistart(const MatrixXd& covariates, const VectorXd& weights, double scale,
                                     const VectorXd& tau, const MultiStartOptions& options) {
  check_lengths(covariates, weights, tau);
  const Index dim = covariates.cols() + 1;
  std::vector<VectorXd> inits;
  if (options.wls_start) {
    const MatrixXd z = augmented(covariates);
    try {
      inits.push_back(weighted_least_squares(z, tau, weights));
    } catch (const Error&) {
    }
  }
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  for (int k = 0; k < options.random_starts; ++k) {
    VectorXd e(dim);
    for (Index j = 0; j < dim; ++j) e[j] = normal(rng);
    if (!options.start_scales.empty()) e *= options.start_scales[static_cast<std::size_t>(k) % options.start_scales.size()];
    inits.push_back(e);
  }
  if (inits.empty()) inits.push_back(VectorXd::Zero(dim));

  std::vector<DcFitReport> fits(inits.size());
  const int count = static_cast<int>(inits.size());
#pragma omp parallel for schedule(dynamic) if (count > 1)
  for (int k = 0; k < count; ++k) {
    fits[static_cast<std::size_t>(k)] = run_start(covariates, weights, scale, tau, LinearRule(inits[static_cast<std::size_t>(k)]), options);
  }

  MultiStartReport out;
  for (std::size_t k = 0; k < fits.size(); ++k) {
    out.start_objectives.push_back(fits[k].objective);
    if (k == 0 || better(fits[k], out.best)) {
      out.best = fits[k];
      out.best_start = static_cast<int>(k);
    }
  }
  return out;
}

MultiStartReport fit_rule_multistart(const ExperimentalSample& exp, const TransferWeights& w,
                                     const ContrastEstimates& tau, const MultiStartOptions& options) {
  return fit_rule_multistart(exp.covariates(), w.values(), risk_scale(w.scale(), exp.size()), tau.tau, options);
}

LearnedRule learn_rule(const ExperimentalSample& exp, const TransferWeights& w, const LearnOptions& options) {
  LearnedRule out;
  out.nuisance = fit_nuisance(exp, w, options.nuisance);
  switch (options.contrast) {
    case ContrastEstimator::aipw: out.tau = contrast_aipw(exp, out.nuisance); break;
    case ContrastEstimator::regression: out.tau = contrast_regression(exp, out.nuisance); break;
    case ContrastEstimator::ipw: out.tau = contrast_ipw(exp, out.nuisance); break;
    case ContrastEstimator::truth:
      throw Error(ErrorKind::invalid_argument, "true-contrast", "true contrasts are only available in simulations");
  }
  out.fit = fit_rule_multistart(exp, w, out.tau, options.policy);
  out.rule = out.fit.best.rule;
  return out;
}

}  // namespace itr
