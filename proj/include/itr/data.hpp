#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace itr {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Experimental rows (X, A, Y). Treatment is stored as 0.0/1.0.
class ExperimentalSample {
 public:
  ExperimentalSample(MatrixXd covariates, VectorXd treatment, VectorXd outcome,
                     std::vector<std::string> names = {});

  Index size() const { return covariates_.rows(); }
  Index dim() const { return covariates_.cols(); }
  const MatrixXd& covariates() const { return covariates_; }
  const VectorXd& treatment() const { return treatment_; }
  const VectorXd& outcome() const { return outcome_; }
  const std::vector<std::string>& names() const { return names_; }

  ExperimentalSample subset(std::span<const Index> rows) const;

 private:
  MatrixXd covariates_;
  VectorXd treatment_;
  VectorXd outcome_;
  std::vector<std::string> names_;
};

// Covariate-only rows from the real-world data.
class TargetSample {
 public:
  explicit TargetSample(MatrixXd covariates, std::vector<std::string> names = {});

  Index size() const { return covariates_.rows(); }
  Index dim() const { return covariates_.cols(); }
  const MatrixXd& covariates() const { return covariates_; }
  const std::vector<std::string>& names() const { return names_; }

  TargetSample subset(std::span<const Index> rows) const;

 private:
  MatrixXd covariates_;
  std::vector<std::string> names_;
};

/// Linear rule d(x) = 1{eta0 + eta1'x > 0}.
class LinearRule {
 public:
  LinearRule() = default;
  explicit LinearRule(VectorXd eta);

  const VectorXd& eta() const { return eta_; }
  Index dim() const { return eta_.size() - 1; }
  double score(const Eigen::Ref<const VectorXd>& x) const;

  /// Rescaled so the largest absolute entry is 1. The zero rule is left as is.
  LinearRule canonical() const;

 private:
  VectorXd eta_;
};

bool same_halfspace(const LinearRule& a, const LinearRule& b, double tol = 1e-12);

enum class WeightMethod { mle, ee, nonparametric, uniform, truth };
enum class WeightScale { sum_to_one, mean_inverse_score };

std::string to_string(WeightMethod method);
WeightMethod weight_method_from_string(const std::string& name);

class TransferWeights {
 public:
  TransferWeights(VectorXd values, WeightScale scale, WeightMethod method, int clipped = 0);

  /// Normalizes nonnegative raw weights to sum to one.
  static TransferWeights normalized(const VectorXd& raw, WeightMethod method, int clipped = 0);
  static TransferWeights uniform(Index n);

  Index size() const { return values_.size(); }
  const VectorXd& values() const { return values_; }
  double operator[](Index i) const { return values_[i]; }
  WeightScale scale() const { return scale_; }
  WeightMethod method() const { return method_; }
  int clipped() const { return clipped_; }

  TransferWeights subset(std::span<const Index> rows) const;

 private:
  VectorXd values_;
  WeightScale scale_;
  WeightMethod method_;
  int clipped_ = 0;
};

// ---------------------------------------------------------------------------
// Ingestion

struct ColumnSchema {
  // Empty means every column other than treatment/outcome, in header order.
  std::vector<std::string> covariates;
  std::string treatment = "A";
  std::string outcome = "Y";
};

ExperimentalSample load_experimental(const std::filesystem::path& path,
                                     const ColumnSchema& schema = {});
TargetSample load_target(const std::filesystem::path& path,
                         const std::vector<std::string>& covariates = {});

// ---------------------------------------------------------------------------
// Simulation

enum class Setting { I, II, III };

std::string to_string(Setting setting);
Setting setting_from_string(const std::string& name);

/// True contrast tau(x) for the simulation settings (two covariates).
double true_contrast(Setting setting, double x1, double x2);

struct SimulationConfig {
  Setting setting = Setting::III;
  Index population_size = 100000;
  Index rwd_size = 1000;
  double alpha0 = -8.0;
  VectorXd alpha1 = (VectorXd(2) << 1.0, -2.0).finished();
  double noise_sd = 0.5;
  std::uint64_t seed = 1;

  void validate() const;
};

struct PopulationDraw {
  SimulationConfig config;
  MatrixXd covariates;          // N x 2
  MatrixXd potential_outcomes;  // N x 2, columns Y*(0), Y*(1)
  VectorXd contrast;            // tau(X_i) without noise
  std::vector<std::uint8_t> selection;
  std::vector<Index> experimental_rows;  // ascending
  std::vector<Index> target_rows;        // ascending
  VectorXd treatment;                    // aligned with experimental_rows

  Index population_size() const { return covariates.rows(); }
  ExperimentalSample experimental() const;
  TargetSample target() const;
  double selection_score(Index row) const;
  /// Y*(1) - Y*(0) on the experimental rows.
  VectorXd experimental_true_contrast() const;
};

/// Draw order from a single mt19937_64 seeded with config.seed:
///   for each population row: x1, x2, eps(0), eps(1) (normal), S (uniform);
///   then the RWD subsample (partial Fisher-Yates over 0..N-1);
///   then A for experimental rows in ascending row order (uniform < 0.5).
PopulationDraw simulate_population(const SimulationConfig& config);

TransferWeights true_inverse_score_weights(const PopulationDraw& draw);

/// Writes population.csv, experimental.csv and target.csv into `dir`.
void write_draw(const PopulationDraw& draw, const std::filesystem::path& dir);

// SplitMix64 step; used to derive independent per-replicate / per-split seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace itr
