#include "itr/evaluation.hpp"

#include "itr/error.hpp"
#include "itr/kernels.hpp"
#include "itr/transfer_weights.hpp"

#include <cmath>
#include <random>

namespace itr {

ValueEstimate value_aipw_weighted(const LinearRule& rule, const ExperimentalSample& exp, const TransferWeights& w,
                                  const NuisanceFit& fit, AugmentationSign sign) {
  if (w.size() != exp.size()) {
    throw Error(ErrorKind::invalid_argument, "length-mismatch", "weights and sample differ in length");
  }
  if (w.scale() != WeightScale::sum_to_one) {
    throw Error(ErrorKind::invalid_argument, "weight-scale", "value estimation needs sum-to-one weights");
  }
  if (rule.dim() != exp.dim()) {
    throw Error(ErrorKind::invalid_argument, "dimension-mismatch", "rule and sample disagree in p");
  }
  const double s = sign == AugmentationSign::standard ? 1.0 : -1.0;
  ValueEstimate out;
  double total = 0.0;
  for (Index i = 0; i < exp.size(); ++i) {
    const auto x = exp.covariates().row(i).transpose();
    const double d = predict(rule, x);
    bool clipped = false;
    const double pi = fit.propensity.probability(x, &clipped);
    out.clipped += clipped;
    const double a = exp.treatment()[i];
    const double q = fit.q(x, d);
    const double ipw = a * d / pi + (1.0 - a) * (1.0 - d) / (1.0 - pi);
    total += w[i] * (ipw * (exp.outcome()[i] - q) + s * q);
  }
  out.value = total;
  out.ess = effective_sample_size(w);
  return out;
}

ValueEstimate value_aipw_unweighted(const LinearRule& rule, const ExperimentalSample& exp, const NuisanceFit& fit,
                                    AugmentationSign sign) {
  return value_aipw_weighted(rule, exp, TransferWeights::uniform(exp.size()), fit, sign);
}

double value_mse(const LinearRule& rule, const PopulationDraw& draw) {
  return kernels::value_mse_omp(rule, draw.covariates, draw.potential_outcomes, draw.contrast);
}

double population_value(const LinearRule& rule, const PopulationDraw& draw) {
  return kernels::population_value_omp(rule, draw.covariates, draw.potential_outcomes);
}

double population_risk(const LinearRule& rule, const MatrixXd& covariates, const VectorXd& contrast) {
  return kernels::misclassification_omp(rule, covariates, contrast) / static_cast<double>(covariates.rows());
}

namespace {

struct EvaluationSample {
  MatrixXd covariates;
  VectorXd contrast;
  double oracle_risk = 0.0;
};

EvaluationSample evaluation_sample(Setting setting, const ProbeConfig& config) {
  if (config.evaluation_size < 2) {
    throw Error(ErrorKind::invalid_argument, "invalid-probe", "evaluation sample needs at least two rows");
  }
  EvaluationSample s;
  std::mt19937_64 rng(derive_seed(config.seed, 0x65766c));
  std::normal_distribution<double> normal;
  s.covariates.resize(config.evaluation_size, 2);
  for (Index i = 0; i < config.evaluation_size; ++i) {
    s.covariates(i, 0) = 1.0 + normal(rng);
    s.covariates(i, 1) = 1.0 + normal(rng);
  }
  s.contrast.resize(config.evaluation_size);
  for (Index i = 0; i < config.evaluation_size; ++i) {
    s.contrast[i] = true_contrast(setting, s.covariates(i, 0), s.covariates(i, 1));
  }
  const auto oracle = kernels::sweep_oracle_2d_omp(s.covariates, s.contrast, config.oracle_angles);
  s.oracle_risk = population_risk(oracle.rule, s.covariates, s.contrast);
  if (setting == Setting::III) {
    const LinearRule exact((VectorXd(3) << 1.0, 2.0, 3.0).finished());
    s.oracle_risk = std::min(s.oracle_risk, population_risk(exact, s.covariates, s.contrast));
  }
  return s;
}

double gap_on(const LinearRule& rule, const EvaluationSample& s) {
  const double risk = population_risk(rule, s.covariates, s.contrast);
  return risk - std::min(s.oracle_risk, risk);
}

}  // namespace

double probe_gap(const LinearRule& rule, Setting setting, const ProbeConfig& config) {
  return gap_on(rule, evaluation_sample(setting, config));
}

ProbeResult risk_consistency_probe(const ProbeConfig& config) {
  if (config.replicates < 1 || config.sizes.empty() || config.settings.empty()) {
    throw Error(ErrorKind::invalid_argument, "invalid-probe", "probe needs settings, sizes and replicates >= 1");
  }
  ProbeResult result;
  for (std::size_t si = 0; si < config.settings.size(); ++si) {
    const Setting setting = config.settings[si];
    const EvaluationSample eval = evaluation_sample(setting, config);
    for (std::size_t ni = 0; ni < config.sizes.size(); ++ni) {
      const Index population = config.sizes[ni];
      std::vector<ProbeRow> rows(static_cast<std::size_t>(config.replicates));
      const std::uint64_t cell_seed = derive_seed(config.seed, 1000 * (si + 1) + ni);
#pragma omp parallel for schedule(dynamic)
      for (int r = 0; r < config.replicates; ++r) {
        ProbeRow& row = rows[static_cast<std::size_t>(r)];
        row.setting = setting;
        row.population_size = population;
        row.replicate = r;
        row.oracle_risk = eval.oracle_risk;
        try {
          SimulationConfig sim;
          sim.setting = setting;
          sim.population_size = population;
          sim.rwd_size = std::max<Index>(2, static_cast<Index>(std::llround(config.rwd_fraction * population)));
          sim.alpha0 = config.alpha0;
          sim.alpha1 = config.alpha1;
          sim.seed = derive_seed(cell_seed, static_cast<std::uint64_t>(r));
          const PopulationDraw draw = simulate_population(sim);
          const ExperimentalSample exp = draw.experimental();
          row.n = exp.size();
          const auto weights = fit_weights_nonparametric_tuned(exp, draw.target());
          LearnOptions learn = config.learn;
          learn.policy.seed = derive_seed(sim.seed, 7);
          const LearnedRule fit = learn_rule(exp, weights.fit.weights, learn);
          row.risk = population_risk(fit.rule, eval.covariates, eval.contrast);
          row.gap = gap_on(fit.rule, eval);
          row.ok = true;
        } catch (const std::exception& e) {
          row.error = e.what();
        }
      }
      ProbeSummary sum;
      sum.setting = setting;
      sum.population_size = population;
      double s1 = 0.0, s2 = 0.0;
      for (const auto& row : rows) {
        if (!row.ok) continue;
        ++sum.ok;
        s1 += row.gap;
        s2 += row.gap * row.gap;
      }
      if (sum.ok > 0) {
        sum.mean_gap = s1 / sum.ok;
        const double var = sum.ok > 1 ? std::max(0.0, (s2 - sum.ok * sum.mean_gap * sum.mean_gap) / (sum.ok - 1)) : 0.0;
        sum.se_gap = std::sqrt(var / sum.ok);
      } else {
        sum.mean_gap = std::nan("");
        sum.se_gap = std::nan("");
      }
      result.summary.push_back(sum);
      result.rows.insert(result.rows.end(), rows.begin(), rows.end());
    }
  }
  return result;
}

}  // namespace itr
