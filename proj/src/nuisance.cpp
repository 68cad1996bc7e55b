#include "itr/nuisance.hpp"

#include "itr/error.hpp"
#include "itr/optim.hpp"

#include <algorithm>
#include <cmath>

namespace itr {

namespace {

const double kSeparationLogit = std::log((1.0 - kPropensityFloor) / kPropensityFloor);

double logistic(double t) { return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); }
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double clip_probability(double p, bool* clipped) {
  const double q = std::clamp(p, kPropensityFloor, 1.0 - kPropensityFloor);
  if (clipped) *clipped = q != p;
  return q;
}

}  // namespace

std::string to_string(PropensityMode mode) { return mode == PropensityMode::constant ? "constant" : "logistic"; }

PropensityMode propensity_mode_from_string(const std::string& name) {
  if (name == "constant") return PropensityMode::constant;
  if (name == "logistic") return PropensityMode::logistic;
  throw Error(ErrorKind::usage, "unknown-propensity", "unknown propensity mode '" + name + "'");
}

double PropensityModel::probability(const Eigen::Ref<const VectorXd>& x, bool* clipped) const {
  if (mode == PropensityMode::constant) return clip_probability(constant, clipped);
  if (gamma.size() != x.size() + 1) {
    throw Error(ErrorKind::invalid_argument, "dimension-mismatch", "propensity model and covariates disagree in p");
  }
  return clip_probability(logistic(gamma[0] + gamma.tail(x.size()).dot(x)), clipped);
}

double OutcomeModel::predict(const Eigen::Ref<const VectorXd>& x, double a) const {
  const Index p = x.size();
  if (beta.size() != 2 * (p + 1)) {
    throw Error(ErrorKind::invalid_argument, "dimension-mismatch", "outcome model and covariates disagree in p");
  }
  return beta[0] + beta.segment(1, p).dot(x) + a * (beta[p + 1] + beta.tail(p).dot(x));
}

MatrixXd q_design(const MatrixXd& covariates, const VectorXd& treatment) {
  const Index n = covariates.rows(), p = covariates.cols();
  MatrixXd l(n, 2 * (p + 1));
  l.col(0).setOnes();
  l.middleCols(1, p) = covariates;
  l.col(p + 1) = treatment;
  l.rightCols(p) = treatment.asDiagonal() * covariates;
  return l;
}

std::vector<std::string> q_design_names(const std::vector<std::string>& covariate_names) {
  std::vector<std::string> names{"(intercept)"};
  for (const auto& x : covariate_names) names.push_back(x);
  names.emplace_back("A");
  for (const auto& x : covariate_names) names.push_back("A:" + x);
  return names;
}

VectorXd weighted_least_squares(const MatrixXd& design, const VectorXd& y, const VectorXd& w,
                                const std::vector<std::string>& column_names) {
  if (design.rows() != y.size() || design.rows() != w.size()) {
    throw Error(ErrorKind::invalid_argument, "length-mismatch", "design, response and weights disagree in length");
  }
  const VectorXd root = w.cwiseSqrt();
  const MatrixXd a = root.asDiagonal() * design;
  const VectorXd b = root.cwiseProduct(y);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols()) {
    std::string cols;
    const auto& perm = qr.colsPermutation().indices();
    for (Index k = qr.rank(); k < design.cols(); ++k) {
      const Index j = perm[k];
      const std::string name = j < static_cast<Index>(column_names.size()) ? column_names[static_cast<std::size_t>(j)]
                                                                           : "column " + std::to_string(j);
      cols += (cols.empty() ? "" : ", ") + name;
    }
    throw Error(ErrorKind::schema, "rank-deficient",
                "weighted design is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                    std::to_string(design.cols()) + "); collinear: " + cols);
  }
  return qr.solve(b);
}

OutcomeModel fit_q_weighted(const ExperimentalSample& exp, const TransferWeights& w) {
  if (w.size() != exp.size()) {
    throw Error(ErrorKind::invalid_argument, "length-mismatch", "weights and sample differ in length");
  }
  const MatrixXd l = q_design(exp.covariates(), exp.treatment());
  return OutcomeModel{weighted_least_squares(l, exp.outcome(), w.values(), q_design_names(exp.names()))};
}

PropensityModel fit_propensity(const ExperimentalSample& exp, const TransferWeights& w, PropensityMode mode) {
  if (w.size() != exp.size()) {
    throw Error(ErrorKind::invalid_argument, "length-mismatch", "weights and sample differ in length");
  }
  const VectorXd& a = exp.treatment();
  PropensityModel model;
  model.mode = mode;
  const double total = w.values().sum();
  model.constant = w.values().dot(a) / total;
  if (mode == PropensityMode::constant) return model;

  const MatrixXd d = [&] {
    MatrixXd out(exp.size(), exp.dim() + 1);
    out.col(0).setOnes();
    out.rightCols(exp.dim()) = exp.covariates();
    return out;
  }();
  const VectorXd wn = w.values() / total;
  const optim::SecondOrderObjective nll = [&](const VectorXd& gamma, VectorXd& grad, MatrixXd& hess) {
    const VectorXd eta = d * gamma;
    double value = 0.0;
    VectorXd resid(eta.size()), curv(eta.size());
    for (Index i = 0; i < eta.size(); ++i) {
      value += wn[i] * (softplus(eta[i]) - a[i] * eta[i]);
      const double p = logistic(eta[i]);
      resid[i] = wn[i] * (p - a[i]);
      curv[i] = wn[i] * p * (1.0 - p);
    }
    grad = d.transpose() * resid;
    hess = d.transpose() * curv.asDiagonal() * d;
    return value;
  };
  VectorXd start = VectorXd::Zero(d.cols());
  start[0] = std::log(model.constant / (1.0 - model.constant));
  optim::NewtonOptions opts;
  opts.divergence_bound = 1e3;
  const auto res = optim::minimize_newton(nll, start, opts);
  bool saturated = false;
  if (res.status == optim::Status::converged) {
    const VectorXd eta = d * res.x;
    for (Index i = 0; i < eta.size(); ++i) {
      if (wn[i] > 0.0 && std::abs(eta[i]) > kSeparationLogit) saturated = true;
    }
  }
  if (res.status == optim::Status::diverged || saturated) {
    throw Error(ErrorKind::convergence, "separation",
                "weighted logistic propensity diverged (treatment separable by covariates); use constant mode");
  }
  if (res.status != optim::Status::converged) {
    throw Error(ErrorKind::convergence, "non-convergence",
                "weighted logistic propensity did not converge (" + optim::to_string(res.status) + ")");
  }
  model.gamma = res.x;
  return model;
}

NuisanceFit fit_nuisance(const ExperimentalSample& exp, const TransferWeights& w, const NuisanceOptions& options) {
  NuisanceFit fit;
  fit.outcome = fit_q_weighted(exp, w);
  fit.propensity = options.weighted_propensity ? fit_propensity(exp, w, options.propensity)
                                               : fit_propensity(exp, TransferWeights::uniform(exp.size()),
                                                                options.propensity);
  fit.weights_method = w.method();
  return fit;
}

std::string to_string(ContrastEstimator estimator) {
  switch (estimator) {
    case ContrastEstimator::aipw: return "aipw";
    case ContrastEstimator::regression: return "regression";
    case ContrastEstimator::ipw: return "ipw";
    case ContrastEstimator::truth: return "true";
  }
  return "unknown";
}

ContrastEstimates contrast_aipw(const ExperimentalSample& exp, NuisanceFit& fit) {
  const Index n = exp.size();
  ContrastEstimates out{VectorXd(n), ContrastEstimator::aipw, fit.weights_method != WeightMethod::uniform};
  int clipped = 0;
  for (Index i = 0; i < n; ++i) {
    const VectorXd x = exp.covariates().row(i).transpose();
    bool c = false;
    const double pi = fit.propensity.probability(x, &c);
    clipped += c;
    const double q1 = fit.q(x, 1.0), q0 = fit.q(x, 0.0);
    const double a = exp.treatment()[i], y = exp.outcome()[i];
    out.tau[i] = (a * (y - q1) / pi + q1) - ((1.0 - a) * (y - q0) / (1.0 - pi) + q0);
  }
  fit.clipped = clipped;
  return out;
}

ContrastEstimates contrast_aipw(const ExperimentalSample& exp, const NuisanceFit& fit) {
  NuisanceFit copy = fit;
  return contrast_aipw(exp, copy);
}

ContrastEstimates contrast_regression(const ExperimentalSample& exp, const NuisanceFit& fit) {
  const Index n = exp.size();
  ContrastEstimates out{VectorXd(n), ContrastEstimator::regression, fit.weights_method != WeightMethod::uniform};
  for (Index i = 0; i < n; ++i) {
    const VectorXd x = exp.covariates().row(i).transpose();
    out.tau[i] = fit.q(x, 1.0) - fit.q(x, 0.0);
  }
  return out;
}

ContrastEstimates contrast_ipw(const ExperimentalSample& exp, const NuisanceFit& fit) {
  const Index n = exp.size();
  ContrastEstimates out{VectorXd(n), ContrastEstimator::ipw, fit.weights_method != WeightMethod::uniform};
  for (Index i = 0; i < n; ++i) {
    const VectorXd x = exp.covariates().row(i).transpose();
    const double pi = fit.propensity.probability(x);
    const double a = exp.treatment()[i], y = exp.outcome()[i];
    out.tau[i] = a * y / pi - (1.0 - a) * y / (1.0 - pi);
  }
  return out;
}

}  // namespace itr
