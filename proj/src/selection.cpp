#include "itr/selection.hpp"

#include "itr/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace itr {

std::string to_string(CandidateKind kind) {
  switch (kind) {
    case CandidateKind::nonparametric: return "np";
    case CandidateKind::mle: return "mle";
    case CandidateKind::ee: return "ee";
    case CandidateKind::unweighted: return "unweighted";
  }
  return "unknown";
}

CandidateKind candidate_kind_from_string(const std::string& name) {
  if (name == "np" || name == "nonparametric") return CandidateKind::nonparametric;
  if (name == "mle" || name == "w1") return CandidateKind::mle;
  if (name == "ee" || name == "w2") return CandidateKind::ee;
  if (name == "unweighted" || name == "unweight") return CandidateKind::unweighted;
  throw Error(ErrorKind::usage, "unknown-method", "unknown candidate method '" + name + "'");
}

MethodCatalog MethodCatalog::standard(bool population_size_known) {
  MethodCatalog c;
  c.methods.push_back(CandidateKind::nonparametric);
  if (population_size_known) {
    c.methods.push_back(CandidateKind::mle);
    c.methods.push_back(CandidateKind::ee);
  }
  c.methods.push_back(CandidateKind::unweighted);
  return c;
}

TransferWeights estimate_weights(CandidateKind kind, const ExperimentalSample& exp, const TargetSample& rwd,
                                 std::optional<double> population_size, const TrainOptions& options) {
  switch (kind) {
    case CandidateKind::nonparametric:
      return fit_weights_nonparametric_tuned(exp, rwd, options.balance).fit.weights;
    case CandidateKind::unweighted:
      return TransferWeights::uniform(exp.size());
    case CandidateKind::mle:
    case CandidateKind::ee: {
      if (!population_size) {
        throw Error(ErrorKind::usage, "missing-population-size",
                    "method " + to_string(kind) + " needs the target population size N");
      }
      const auto model = kind == CandidateKind::mle
                             ? fit_sampling_mle(exp, rwd, *population_size, options.parametric)
                             : fit_sampling_ee(exp, rwd, *population_size, {}, options.parametric);
      return weights_from_score(model, exp);
    }
  }
  throw Error(ErrorKind::invalid_argument, "unknown-method", "unknown candidate method");
}

TrainedMethod train_method(CandidateKind kind, const ExperimentalSample& exp, const TargetSample& rwd,
                           std::optional<double> population_size, const TrainOptions& options) {
  TrainedMethod out;
  out.kind = kind;
  out.weights = estimate_weights(kind, exp, rwd, population_size, options);
  out.learned = learn_rule(exp, out.weights, options.learn);
  return out;
}

std::pair<std::vector<Index>, std::vector<Index>> split_halves(Index size, std::uint64_t seed) {
  if (size < 2) throw Error(ErrorKind::invalid_argument, "too-few-rows", "splitting needs at least two rows");
  std::vector<Index> order(static_cast<std::size_t>(size));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto train_size = static_cast<std::ptrdiff_t>((size + 1) / 2);
  std::vector<Index> train(order.begin(), order.begin() + train_size);
  std::vector<Index> test(order.begin() + train_size, order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

SelectionReport cross_validate_candidates(const ExperimentalSample& exp, const TargetSample& rwd,
                                          const std::vector<CandidateMethod>& candidates,
                                          const EvaluatorFactory& evaluator, int splits, std::uint64_t seed,
                                          std::optional<double> population_size) {
  if (candidates.empty()) throw Error(ErrorKind::invalid_argument, "empty-catalog", "no candidate methods");
  if (splits < 1) throw Error(ErrorKind::invalid_argument, "invalid-splits", "number of splits must be >= 1");
  if (exp.size() < 4 || rwd.size() < 4) {
    throw Error(ErrorKind::invalid_argument, "too-few-rows", "cross-validation needs n >= 4 and m >= 4");
  }
  const std::size_t g = candidates.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::optional<double> half =
      population_size ? std::optional<double>(*population_size / 2.0) : std::optional<double>();

  SelectionReport report;
  report.splits = splits;
  report.seed = seed;
  for (const auto& c : candidates) report.methods.push_back(c.name);
  report.values.assign(static_cast<std::size_t>(splits), std::vector<double>(g, nan));
  std::vector<std::vector<std::string>> notes(static_cast<std::size_t>(splits));
  for (int b = 0; b < splits; ++b) report.split_seeds.push_back(derive_seed(seed, static_cast<std::uint64_t>(b)));

#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < splits; ++b) {
    const auto sb = static_cast<std::size_t>(b);
    const std::uint64_t s = report.split_seeds[sb];
    const auto [exp_train, exp_test] = split_halves(exp.size(), derive_seed(s, 0));
    const auto [rwd_train, rwd_test] = split_halves(rwd.size(), derive_seed(s, 1));
    auto& note = notes[sb];
    SplitEvaluator evaluate;
    std::optional<ExperimentalSample> train_exp, test_exp;
    std::optional<TargetSample> train_rwd, test_rwd;
    try {
      train_exp.emplace(exp.subset(exp_train));
      test_exp.emplace(exp.subset(exp_test));
      train_rwd.emplace(rwd.subset(rwd_train));
      test_rwd.emplace(rwd.subset(rwd_test));
      evaluate = evaluator(*test_exp, *test_rwd);
    } catch (const std::exception& e) {
      note.push_back("split " + std::to_string(b + 1) + ": evaluation unavailable: " + e.what());
      continue;
    }
    for (std::size_t k = 0; k < g; ++k) {
      try {
        const LinearRule rule = candidates[k].train(*train_exp, *train_rwd, half);
        const double v = evaluate(rule);
        if (!std::isfinite(v)) throw Error(ErrorKind::convergence, "non-finite-value", "value is not finite");
        report.values[sb][k] = v;
      } catch (const std::exception& e) {
        note.push_back("split " + std::to_string(b + 1) + ": " + candidates[k].name + " failed: " + e.what());
      }
    }
  }
  for (const auto& n : notes) report.diagnostics.insert(report.diagnostics.end(), n.begin(), n.end());

  report.means.assign(g, nan);
  report.disqualified.assign(g, false);
  std::optional<std::size_t> winner;
  for (std::size_t k = 0; k < g; ++k) {
    int present = 0;
    double total = 0.0;
    for (int b = 0; b < splits; ++b) {
      const double v = report.values[static_cast<std::size_t>(b)][k];
      if (std::isnan(v)) continue;
      ++present;
      total += v;
    }
    const int missing = splits - present;
    if (present == 0 || 2 * missing > splits) {
      report.disqualified[k] = true;
      report.diagnostics.push_back(candidates[k].name + " disqualified: missing on " + std::to_string(missing) +
                                   " of " + std::to_string(splits) + " splits");
      continue;
    }
    report.means[k] = total / present;
    if (!winner || report.means[k] > report.means[*winner]) winner = k;
  }
  if (!winner) {
    throw Error(ErrorKind::convergence, "no-qualified-method", "every candidate method was disqualified");
  }
  report.winner = *winner;
  report.winner_name = candidates[*winner].name;
  report.rule = candidates[*winner].train(exp, rwd, population_size);
  return report;
}

EvaluatorFactory weighted_value_evaluator(const TrainOptions& options) {
  return [options](const ExperimentalSample& test_exp, const TargetSample& test_rwd) -> SplitEvaluator {
    const TransferWeights w = fit_weights_nonparametric_tuned(test_exp, test_rwd, options.balance).fit.weights;
    const NuisanceFit fit = fit_nuisance(test_exp, w, options.learn.nuisance);
    return [w, fit, test_exp](const LinearRule& rule) { return value_aipw_weighted(rule, test_exp, w, fit).value; };
  };
}

SelectionReport cross_validate(const ExperimentalSample& exp, const TargetSample& rwd, const MethodCatalog& catalog,
                               int splits, std::uint64_t seed, std::optional<double> population_size,
                               const TrainOptions& options) {
  std::vector<CandidateMethod> candidates;
  for (CandidateKind kind : catalog.methods) {
    if ((kind == CandidateKind::mle || kind == CandidateKind::ee) && !population_size) {
      throw Error(ErrorKind::usage, "missing-population-size",
                  "catalog lists " + to_string(kind) + " but N was not supplied");
    }
    candidates.push_back({to_string(kind), [kind, options](const ExperimentalSample& e, const TargetSample& r,
                                                           std::optional<double> n) {
                            return train_method(kind, e, r, n, options).learned.rule;
                          }});
  }
  return cross_validate_candidates(exp, rwd, candidates, weighted_value_evaluator(options), splits, seed,
                                   population_size);
}

}  // namespace itr
