#pragma once

#include "itr/data.hpp"
#include "itr/nuisance.hpp"
#include "itr/policy_dc.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace itr {

// standard: ... + Q(X, d).  verbatim: ... - Q(X, d), as printed in the source display.
enum class AugmentationSign { standard, verbatim };

struct ValueEstimate {
  double value = 0.0;
  double ess = 0.0;
  int clipped = 0;
};

/// sum_i w_i ([A_i d_i / pi + (1 - A_i)(1 - d_i)/(1 - pi)] (Y_i - Q(X_i, d_i)) +/- Q(X_i, d_i)).
/// Requires sum-to-one weights.
ValueEstimate value_aipw_weighted(const LinearRule& rule, const ExperimentalSample& exp, const TransferWeights& w,
                                  const NuisanceFit& fit, AugmentationSign sign = AugmentationSign::standard);

/// Same estimator with uniform weights 1/n.
ValueEstimate value_aipw_unweighted(const LinearRule& rule, const ExperimentalSample& exp, const NuisanceFit& fit,
                                    AugmentationSign sign = AugmentationSign::standard);

/// N^-1 sum (Y*(d(X_i)) - Y*(1{tau(X_i) > 0}))^2 over the simulated population.
double value_mse(const LinearRule& rule, const PopulationDraw& draw);

/// N^-1 sum Y*(d(X_i)) over the simulated population.
double population_value(const LinearRule& rule, const PopulationDraw& draw);

/// N^-1 sum |tau_i| 1{d(x_i) != 1{tau_i > 0}}.
double population_risk(const LinearRule& rule, const MatrixXd& covariates, const VectorXd& contrast);

struct ProbeConfig {
  std::vector<Setting> settings{Setting::III};
  std::vector<Index> sizes{1000, 10000, 100000};
  int replicates = 20;
  std::uint64_t seed = 1;
  double alpha0 = -2.0;
  VectorXd alpha1 = (VectorXd(2) << 1.0, -2.0).finished();
  double rwd_fraction = 0.1;
  int oracle_angles = 180;
  Index evaluation_size = 100000;  // fresh covariate draws used to measure population risk
  LearnOptions learn{};
};

struct ProbeRow {
  Setting setting = Setting::III;
  Index population_size = 0;
  int replicate = 0;
  Index n = 0;
  bool ok = false;
  double risk = 0.0;
  double oracle_risk = 0.0;
  double gap = 0.0;
  std::string error;
};

struct ProbeSummary {
  Setting setting = Setting::III;
  Index population_size = 0;
  int ok = 0;
  double mean_gap = 0.0;
  double se_gap = 0.0;
};

struct ProbeResult {
  std::vector<ProbeRow> rows;
  std::vector<ProbeSummary> summary;
};

/// Population 0-1 risk of the rule learned from nonparametric weights minus the best risk
/// found by the angular sweep oracle (and the exact linear rule in setting III).
ProbeResult risk_consistency_probe(const ProbeConfig& config);

/// Risk gap of an arbitrary rule under the probe's evaluation sample for `setting`.
double probe_gap(const LinearRule& rule, Setting setting, const ProbeConfig& config);

}  // namespace itr
