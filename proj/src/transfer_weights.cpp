#include "itr/transfer_weights.hpp"

#include "itr/error.hpp"
#include "itr/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace itr {

namespace {

double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }
double logistic(double t) { return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); }

void check_parametric_inputs(const ExperimentalSample& exp, const TargetSample& rwd, double population_size) {
  if (exp.dim() != rwd.dim()) {
    throw Error(ErrorKind::schema, "dimension-mismatch", "experimental and target samples have different columns");
  }
  if (!(population_size > 0.0) || !std::isfinite(population_size)) {
    throw Error(ErrorKind::invalid_argument, "invalid-population-size", "population size N must be positive");
  }
  if (population_size <= static_cast<double>(exp.size())) {
    throw Error(ErrorKind::invalid_argument, "invalid-population-size",
                "population size N must exceed the experimental sample size");
  }
}

VectorXd intercept_start(Index k, double n, double population_size) {
  VectorXd alpha = VectorXd::Zero(k);
  const double q = n / population_size;
  alpha[0] = std::log(q / (1.0 - q));
  return alpha;
}

}  // namespace

std::string to_string(ScoreFeatures features) {
  return features == ScoreFeatures::linear ? "linear" : "squared";
}

MatrixXd score_design(ScoreFeatures features, const MatrixXd& covariates) {
  MatrixXd d(covariates.rows(), covariates.cols() + 1);
  d.col(0).setOnes();
  if (features == ScoreFeatures::linear) {
    d.rightCols(covariates.cols()) = covariates;
  } else {
    d.rightCols(covariates.cols()) = covariates.array().square().matrix();
  }
  return d;
}

SamplingScoreModel::SamplingScoreModel(VectorXd alpha, ScoreFeatures features, WeightMethod method)
    : alpha_(std::move(alpha)), features_(features), method_(method) {
  if (!alpha_.allFinite()) {
    throw Error(ErrorKind::convergence, "non-finite-score-model", "sampling score coefficients are not finite");
  }
}

VectorXd SamplingScoreModel::scores(const MatrixXd& covariates) const {
  if (covariates.cols() + 1 != alpha_.size()) {
    throw Error(ErrorKind::invalid_argument, "dimension-mismatch", "sampling model and covariates disagree in p");
  }
  const VectorXd eta = score_design(features_, covariates) * alpha_;
  return eta.unaryExpr([](double t) { return logistic(t); });
}

SamplingScoreModel fit_sampling_mle(const ExperimentalSample& exp, const TargetSample& rwd, double population_size,
                                    const ParametricOptions& options) {
  check_parametric_inputs(exp, rwd, population_size);
  const MatrixXd d_exp = score_design(options.features, exp.covariates());
  const MatrixXd d_rwd = score_design(options.features, rwd.covariates());
  const VectorXd exp_term = d_exp.colwise().sum().transpose() / population_size;
  const double inv_m = 1.0 / static_cast<double>(rwd.size());

  // Negative modified log-likelihood.
  const optim::SecondOrderObjective objective = [&](const VectorXd& alpha, VectorXd& grad, MatrixXd& hess) {
    const VectorXd eta = d_rwd * alpha;
    double value = -exp_term.dot(alpha);
    VectorXd p(eta.size());
    VectorXd curvature(eta.size());
    for (Index i = 0; i < eta.size(); ++i) {
      value += inv_m * softplus(eta[i]);
      p[i] = logistic(eta[i]);
      curvature[i] = p[i] * (1.0 - p[i]);
    }
    grad = -exp_term + inv_m * (d_rwd.transpose() * p);
    hess = inv_m * (d_rwd.transpose() * curvature.asDiagonal() * d_rwd);
    return value;
  };

  optim::NewtonOptions newton;
  newton.max_iterations = options.max_iterations;
  newton.tolerance = options.tolerance;
  newton.divergence_bound = 1e4;
  const auto res = optim::minimize_newton(objective, intercept_start(d_exp.cols(), double(exp.size()), population_size),
                                          newton);
  if (res.status == optim::Status::diverged) {
    throw Error(ErrorKind::convergence, "separation",
                "modified likelihood is unbounded (coefficients diverged); the gradient cannot vanish");
  }
  if (res.status != optim::Status::converged) {
    throw Error(ErrorKind::convergence, "non-convergence",
                "modified MLE stopped with status " + optim::to_string(res.status) + ", gradient norm " +
                    std::to_string(res.gradient_norm));
  }
  SamplingScoreModel model(res.x, options.features, WeightMethod::mle);
  model.iterations = res.iterations;
  model.residual_norm = res.gradient_norm;
  return model;
}

SamplingScoreModel fit_sampling_ee(const ExperimentalSample& exp, const TargetSample& rwd, double population_size,
                                   const MomentFunction& g, const ParametricOptions& options) {
  check_parametric_inputs(exp, rwd, population_size);
  const MatrixXd d_exp = score_design(options.features, exp.covariates());
  const MatrixXd d_rwd = score_design(options.features, rwd.covariates());
  const Index k = d_exp.cols();

  const auto moments = [&](const MatrixXd& design) {
    MatrixXd out(design.rows(), k);
    for (Index i = 0; i < design.rows(); ++i) {
      if (g) {
        const VectorXd gi = g(design.row(i).tail(k - 1).transpose());
        if (gi.size() != k) {
          throw Error(ErrorKind::invalid_argument, "moment-dimension",
                      "moment function must return p+1 = " + std::to_string(k) + " values");
        }
        out.row(i) = gi.transpose();
      } else {
        out.row(i) = design.row(i);
      }
    }
    return out;
  };
  const MatrixXd g_exp = moments(d_exp);
  const VectorXd target = moments(d_rwd).colwise().mean().transpose();
  const double inv_n_pop = 1.0 / population_size;

  const optim::ResidualSystem system = [&](const VectorXd& alpha, MatrixXd& jac) {
    const VectorXd eta = d_exp * alpha;
    const VectorXd e = (-eta).array().exp().matrix();  // 1/pi = 1 + e
    VectorXd r = inv_n_pop * (g_exp.transpose() * (VectorXd::Ones(eta.size()) + e)) - target;
    jac = -inv_n_pop * (g_exp.transpose() * e.asDiagonal() * d_exp);
    return r;
  };

  optim::NewtonOptions newton;
  newton.max_iterations = options.max_iterations;
  newton.tolerance = options.tolerance;
  newton.divergence_bound = 1e4;
  const VectorXd start = intercept_start(k, double(exp.size()), population_size);
  optim::NewtonResult res;
  if (!g) {
    // With g = (1, phi) the residual is minus the gradient of a convex potential.
    const VectorXd linear = target - inv_n_pop * (d_exp.transpose() * VectorXd::Ones(d_exp.rows()));
    const optim::SecondOrderObjective potential = [&](const VectorXd& alpha, VectorXd& grad, MatrixXd& hess) {
      const VectorXd e = (-(d_exp * alpha)).array().exp().matrix();
      grad = linear - inv_n_pop * (d_exp.transpose() * e);
      hess = inv_n_pop * (d_exp.transpose() * e.asDiagonal() * d_exp);
      return inv_n_pop * e.sum() + alpha.dot(linear);
    };
    res = optim::minimize_newton(potential, start, newton);
  } else {
    res = optim::solve_newton(system, start, newton);
  }
  if (res.status != optim::Status::converged) {
    throw Error(ErrorKind::convergence, "divergence",
                "estimating equations not solved (" + optim::to_string(res.status) + ", residual " +
                    std::to_string(res.gradient_norm) + ")");
  }
  SamplingScoreModel model(res.x, options.features, WeightMethod::ee);
  model.iterations = res.iterations;
  model.residual_norm = res.gradient_norm;
  return model;
}

TransferWeights weights_from_score(const SamplingScoreModel& model, const ExperimentalSample& exp) {
  constexpr double floor = 1e-12;
  VectorXd pi = model.scores(exp.covariates());
  int clipped = 0;
  for (Index i = 0; i < pi.size(); ++i) {
    if (pi[i] < floor) {
      pi[i] = floor;
      ++clipped;
    }
  }
  return TransferWeights::normalized(pi.cwiseInverse(), model.method(), clipped);
}

// ---------------------------------------------------------------------------

BalanceConstraints BalanceConstraints::moments(const std::vector<std::string>& names, int order) {
  if (order < 1) throw Error(ErrorKind::invalid_argument, "invalid-order", "moment order must be >= 1");
  BalanceConstraints c;
  for (int power = 1; power <= order; ++power) {
    for (std::size_t j = 0; j < names.size(); ++j) {
      const Index col = static_cast<Index>(j);
      std::string name = power == 1 ? names[j] : names[j] + "^" + std::to_string(power);
      c.features.push_back({std::move(name), [col, power](const Eigen::Ref<const VectorXd>& x) {
                              return std::pow(x[col], power);
                            }});
    }
  }
  c.tolerances = VectorXd::Zero(c.size());
  return c;
}

BalanceConstraints BalanceConstraints::with_tolerances(VectorXd sigma) const {
  BalanceConstraints c = *this;
  c.tolerances = std::move(sigma);
  return c;
}

MatrixXd BalanceConstraints::evaluate(const MatrixXd& covariates) const {
  MatrixXd out(covariates.rows(), size());
  for (Index i = 0; i < covariates.rows(); ++i) {
    const VectorXd x = covariates.row(i).transpose();
    for (Index k = 0; k < size(); ++k) out(i, k) = features[static_cast<std::size_t>(k)].eval(x);
  }
  return out;
}

namespace {

struct DualProblem {
  const MatrixXd& z;      // standardized features, target 0
  const VectorXd& sigma;  // standardized tolerances

  // Softmax weights and log-sum-exp at lambda.
  double weights(const VectorXd& lambda, VectorXd& w) const {
    const VectorXd s = z * lambda;
    const double mx = s.maxCoeff();
    w = (s.array() - mx).exp().matrix();
    const double total = w.sum();
    w /= total;
    return mx + std::log(total);
  }
};

double huber(double x, double width) { return std::abs(x) <= width ? 0.5 * x * x / width : std::abs(x) - 0.5 * width; }
double huber_slope(double x, double width) { return std::abs(x) <= width ? x / width : (x > 0 ? 1.0 : -1.0); }

// Active-set Newton refinement of the nonsmooth dual. Returns false if it could not settle.
bool polish_dual(const DualProblem& dual, VectorXd& lambda, int& iterations) {
  const Index k = lambda.size();
  constexpr double zero_tol = 1e-10;
  // free: sigma == 0 (smooth in lambda_k); otherwise sign fixed while active.
  std::vector<int> sign(static_cast<std::size_t>(k), 0);
  std::vector<bool> active(static_cast<std::size_t>(k), false);
  for (Index j = 0; j < k; ++j) {
    if (dual.sigma[j] == 0.0) {
      active[j] = true;
    } else if (std::abs(lambda[j]) > zero_tol) {
      active[j] = true;
      sign[j] = lambda[j] > 0 ? 1 : -1;
    } else {
      lambda[j] = 0.0;
    }
  }

  VectorXd w;
  for (int round = 0; round < 4 * k + 10; ++round) {
    std::vector<Index> idx;
    for (Index j = 0; j < k; ++j) {
      if (active[j]) idx.push_back(j);
    }
    if (!idx.empty()) {
      const MatrixXd za = dual.z(Eigen::all, idx);
      VectorXd lin(static_cast<Index>(idx.size()));
      for (std::size_t a = 0; a < idx.size(); ++a) lin[Index(a)] = dual.sigma[idx[a]] * sign[idx[a]];
      const optim::SecondOrderObjective f = [&](const VectorXd& la, VectorXd& grad, MatrixXd& hess) {
        const VectorXd s = za * la;
        const double mx = s.maxCoeff();
        VectorXd ww = (s.array() - mx).exp().matrix();
        const double total = ww.sum();
        ww /= total;
        const VectorXd mean = za.transpose() * ww;
        grad = mean + lin;
        hess = za.transpose() * ww.asDiagonal() * za - mean * mean.transpose();
        return mx + std::log(total) + lin.dot(la);
      };
      optim::NewtonOptions opts;
      opts.tolerance = 1e-12;
      opts.max_iterations = 200;
      opts.divergence_bound = 1e3;
      const auto res = optim::minimize_newton(f, lambda(idx), opts);
      iterations += res.iterations;
      if (res.status == optim::Status::diverged) return false;
      if (res.gradient_norm > 1e-9) return false;
      lambda(idx) = res.x;
    }

    bool changed = false;
    // Drop sign-constrained variables that crossed zero.
    for (Index j = 0; j < k; ++j) {
      if (active[j] && sign[j] != 0 && lambda[j] * sign[j] < 0.0) {
        active[j] = false;
        lambda[j] = 0.0;
        changed = true;
      }
    }
    if (changed) continue;
    dual.weights(lambda, w);
    const VectorXd mean = dual.z.transpose() * w;
    // Add the most violated inactive constraint.
    Index worst = -1;
    double worst_excess = 1e-12;
    for (Index j = 0; j < k; ++j) {
      if (active[j]) continue;
      const double excess = std::abs(mean[j]) - dual.sigma[j];
      if (excess > worst_excess) {
        worst_excess = excess;
        worst = j;
      }
    }
    if (worst < 0) return true;
    active[worst] = true;
    sign[worst] = mean[worst] > 0 ? -1 : 1;
    lambda[worst] = 0.0;
  }
  return false;
}

}  // namespace

EntropyBalanceFit fit_weights_nonparametric(const ExperimentalSample& exp, const TargetSample& rwd,
                                            const BalanceConstraints& constraints) {
  if (exp.dim() != rwd.dim()) {
    throw Error(ErrorKind::schema, "dimension-mismatch", "experimental and target samples have different columns");
  }
  const Index kk = constraints.size();
  if (kk < 1) throw Error(ErrorKind::invalid_argument, "no-constraints", "at least one balance feature is required");
  if (constraints.tolerances.size() != kk || !constraints.tolerances.allFinite() ||
      constraints.tolerances.minCoeff() < 0.0) {
    throw Error(ErrorKind::invalid_argument, "invalid-tolerance", "need one finite tolerance >= 0 per feature");
  }
  const Index n = exp.size();
  const MatrixXd g_exp = constraints.evaluate(exp.covariates());
  const MatrixXd g_rwd = constraints.evaluate(rwd.covariates());
  if (!g_exp.allFinite() || !g_rwd.allFinite()) {
    throw Error(ErrorKind::invalid_argument, "non-finite-feature", "balance features must be finite");
  }
  const VectorXd target = g_rwd.colwise().mean().transpose();

  EntropyBalanceFit fit{TransferWeights::uniform(n), VectorXd::Zero(kk), {}, 0.0, 0.0, 0, {}};

  // Standardize on the RWD scale.
  VectorXd scale(kk);
  for (Index j = 0; j < kk; ++j) {
    const double sd_rwd = std::sqrt((g_rwd.col(j).array() - target[j]).square().mean());
    const double sd_exp = std::sqrt((g_exp.col(j).array() - g_exp.col(j).mean()).square().mean());
    scale[j] = sd_rwd > 1e-12 ? sd_rwd : (sd_exp > 1e-12 ? sd_exp : 1.0);
  }
  MatrixXd z(n, kk);
  for (Index j = 0; j < kk; ++j) z.col(j) = (g_exp.col(j).array() - target[j]).matrix() / scale[j];
  const VectorXd sigma = constraints.tolerances.cwiseQuotient(scale);
  const auto name = [&](Index j) { return constraints.features[static_cast<std::size_t>(j)].name; };

  // Quick infeasibility check: target outside the (tolerance-widened) range of a feature.
  for (Index j = 0; j < kk; ++j) {
    const double lo = z.col(j).minCoeff(), hi = z.col(j).maxCoeff();
    if (lo - sigma[j] > 1e-12 || hi + sigma[j] < -1e-12) {
      throw Error(ErrorKind::infeasible, "infeasible-balance",
                  "no weights can balance feature '" + name(j) + "' (target outside experimental range)");
    }
  }

  // Columns used in the dual: drop constant columns and exact duplicates.
  std::vector<Index> cols;
  for (Index j = 0; j < kk; ++j) {
    const double range = z.col(j).maxCoeff() - z.col(j).minCoeff();
    if (range <= 1e-12) {
      fit.notices.push_back("feature '" + name(j) + "' is constant in the experimental sample; not reweighted");
      continue;
    }
    bool duplicate = false;
    for (std::size_t a = 0; a < cols.size(); ++a) {
      const Index c = cols[a];
      if ((z.col(j) - z.col(c)).cwiseAbs().maxCoeff() <= 1e-12) {
        duplicate = true;
        if (sigma[j] < sigma[c]) cols[a] = j;
        break;
      }
    }
    if (!duplicate) cols.push_back(j);
  }

  VectorXd w = VectorXd::Constant(n, 1.0 / double(n));
  VectorXd lambda_full = VectorXd::Zero(kk);
  if (cols.empty()) {
    fit.notices.push_back("all balance features are degenerate; returning uniform weights");
  } else {
    const MatrixXd za = z(Eigen::all, cols);
    const VectorXd sa = sigma(cols);
    const DualProblem dual{za, sa};
    VectorXd lambda = VectorXd::Zero(za.cols());

    // Smoothed dual by quasi-Newton with decreasing Huber width.
    for (const double width : {1e-2, 1e-4, 1e-6, 1e-8}) {
      const optim::Objective smoothed = [&](const VectorXd& l, VectorXd& grad) {
        VectorXd ww;
        double value = dual.weights(l, ww);
        grad = za.transpose() * ww;
        for (Index j = 0; j < l.size(); ++j) {
          value += sa[j] * huber(l[j], width);
          grad[j] += sa[j] * huber_slope(l[j], width);
        }
        return value;
      };
      optim::LbfgsOptions opts;
      opts.gradient_tolerance = 1e-10;
      opts.max_iterations = 500;
      const auto res = optim::minimize_lbfgs(smoothed, lambda, opts);
      lambda = res.x;
      fit.iterations += res.iterations;
    }

    VectorXd polished = lambda;
    const bool settled = lambda.lpNorm<Eigen::Infinity>() < 1e3 && polish_dual(dual, polished, fit.iterations);
    dual.weights(polished, w);
    const VectorXd mean = za.transpose() * w;
    double worst_excess = -1.0;
    Index worst = 0;
    for (Index j = 0; j < za.cols(); ++j) {
      const double excess = std::abs(mean[j]) - sa[j];
      if (excess > worst_excess) {
        worst_excess = excess;
        worst = j;
      }
    }
    if (!settled || worst_excess > 1e-9) {
      throw Error(ErrorKind::infeasible, "infeasible-balance",
                  "balance constraints appear infeasible (dual diverges); most violated feature '" +
                      name(cols[static_cast<std::size_t>(worst)]) + "'");
    }
    lambda_full(cols) = polished;

    // Duality gap: primal sum w log w versus minus the dual objective.
    double log_sum_exp = dual.weights(polished, w);
    double dual_value = log_sum_exp + sa.dot(polished.cwiseAbs());
    double primal = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (w[i] > 0.0) primal += w[i] * std::log(w[i]);
    }
    fit.duality_gap = std::abs(primal + dual_value);
  }

  fit.weights = TransferWeights::normalized(w, WeightMethod::nonparametric);
  fit.lambda = lambda_full;
  const VectorXd& wn = fit.weights.values();
  fit.entropy = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (wn[i] > 0.0) fit.entropy += wn[i] * std::log(wn[i]);
  }
  const VectorXd weighted_mean = g_exp.transpose() * wn;
  for (Index j = 0; j < kk; ++j) {
    BalanceRow row;
    row.feature = name(j);
    row.weighted_mean = weighted_mean[j];
    row.target = target[j];
    row.imbalance = std::abs(weighted_mean[j] - target[j]);
    row.tolerance = constraints.tolerances[j];
    row.violation = std::max(0.0, row.imbalance - row.tolerance);
    fit.balance.push_back(row);
    if (row.violation > 1e-8) {
      throw Error(ErrorKind::infeasible, "infeasible-balance",
                  "feature '" + row.feature + "' cannot be balanced within its tolerance");
    }
  }
  return fit;
}

TunedBalanceFit fit_weights_nonparametric_tuned(const ExperimentalSample& exp, const TargetSample& rwd,
                                                const ToleranceSearch& search) {
  const BalanceConstraints base = BalanceConstraints::moments(exp.names(), search.moment_order);
  const MatrixXd g_rwd = base.evaluate(rwd.covariates());
  const VectorXd mean = g_rwd.colwise().mean().transpose();
  VectorXd sd(base.size());
  for (Index j = 0; j < base.size(); ++j) {
    sd[j] = std::sqrt((g_rwd.col(j).array() - mean[j]).square().sum() / double(std::max<Index>(1, rwd.size() - 1)));
  }
  const double root_n = std::sqrt(double(exp.size()));

  std::optional<TunedBalanceFit> best;
  std::optional<Error> last_error;
  for (const double delta : search.deltas) {
    std::optional<EntropyBalanceFit> fit;
    try {
      fit = fit_weights_nonparametric(exp, rwd, base.with_tolerances(delta * sd / root_n));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::infeasible) throw;
      last_error = e;
      continue;
    }
    bool ok = true;
    for (Index j = 0; j < base.size(); ++j) {
      const double scale = sd[j] > 0.0 ? sd[j] : 1.0;
      if (fit->balance[static_cast<std::size_t>(j)].imbalance / scale > search.max_standardized_imbalance) {
        ok = false;
      }
    }
    if (!ok) continue;
    const double ess = effective_sample_size(fit->weights);
    if (!best || ess > best->ess) best = TunedBalanceFit{std::move(*fit), delta, ess};
  }
  if (!best) {
    if (last_error) throw *last_error;
    throw Error(ErrorKind::infeasible, "infeasible-balance", "no tolerance level met the imbalance bound");
  }
  return *best;
}

double effective_sample_size(const TransferWeights& w) {
  const double s = w.values().sum();
  const double s2 = w.values().squaredNorm();
  return s * s / s2;
}

}  // namespace itr
