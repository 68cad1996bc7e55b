#pragma once

#include "itr/data.hpp"
#include "itr/evaluation.hpp"
#include "itr/policy_dc.hpp"
#include "itr/transfer_weights.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace itr {

enum class CandidateKind { nonparametric, mle, ee, unweighted };

std::string to_string(CandidateKind kind);
CandidateKind candidate_kind_from_string(const std::string& name);

struct MethodCatalog {
  std::vector<CandidateKind> methods;

  /// Nonparametric and unweighted always; mle and ee only when N is known.
  static MethodCatalog standard(bool population_size_known);
};

struct TrainOptions {
  LearnOptions learn{};
  ToleranceSearch balance{};
  ParametricOptions parametric{};
};

/// Transfer weights for one candidate. Parametric kinds need `population_size`.
TransferWeights estimate_weights(CandidateKind kind, const ExperimentalSample& exp, const TargetSample& rwd,
                                 std::optional<double> population_size, const TrainOptions& options);

struct TrainedMethod {
  CandidateKind kind = CandidateKind::unweighted;
  TransferWeights weights = TransferWeights::uniform(2);
  LearnedRule learned;
};

TrainedMethod train_method(CandidateKind kind, const ExperimentalSample& exp, const TargetSample& rwd,
                           std::optional<double> population_size, const TrainOptions& options);

/// Random halves of 0..size-1; the first (training) half takes the extra row for odd sizes.
std::pair<std::vector<Index>, std::vector<Index>> split_halves(Index size, std::uint64_t seed);

struct CandidateMethod {
  std::string name;
  std::function<LinearRule(const ExperimentalSample&, const TargetSample&, std::optional<double>)> train;
};

using SplitEvaluator = std::function<double(const LinearRule&)>;
using EvaluatorFactory = std::function<SplitEvaluator(const ExperimentalSample&, const TargetSample&)>;

struct SelectionReport {
  std::vector<std::string> methods;
  std::vector<std::vector<double>> values;  // [split][method], NaN when the method failed
  std::vector<double> means;                // NaN for disqualified methods
  std::vector<bool> disqualified;
  std::vector<std::uint64_t> split_seeds;
  std::vector<std::string> diagnostics;
  std::size_t winner = 0;
  std::string winner_name;
  LinearRule rule;  // winner refit on the full data
  int splits = 0;
  std::uint64_t seed = 0;
};

/// Multi-split cross-validation over arbitrary candidates. Candidates see N/2 when N is given.
SelectionReport cross_validate_candidates(const ExperimentalSample& exp, const TargetSample& rwd,
                                          const std::vector<CandidateMethod>& candidates,
                                          const EvaluatorFactory& evaluator, int splits, std::uint64_t seed,
                                          std::optional<double> population_size);

/// Test halves get tuned nonparametric weights, nuisances refit with them, and the weighted AIPW value.
EvaluatorFactory weighted_value_evaluator(const TrainOptions& options);

SelectionReport cross_validate(const ExperimentalSample& exp, const TargetSample& rwd, const MethodCatalog& catalog,
                               int splits, std::uint64_t seed, std::optional<double> population_size,
                               const TrainOptions& options = {});

}  // namespace itr
