#pragma once

#include "itr/data.hpp"

#include <cstdint>

// Hot loops used by evaluation and the test oracles. Every kernel has a plain serial
// reference and an OpenMP version; the OpenMP reductions sum fixed 4096-row blocks in
// block order, so their results do not depend on the thread count.
namespace itr::kernels {

inline constexpr Index kBlockRows = 4096;

/// N^-1 sum_i (Y*_i(d_i) - Y*_i(1{tau_i > 0}))^2. `potential` has columns Y*(0), Y*(1).
double value_mse_serial(const LinearRule& rule, const MatrixXd& covariates, const MatrixXd& potential,
                        const VectorXd& contrast);
double value_mse_omp(const LinearRule& rule, const MatrixXd& covariates, const MatrixXd& potential,
                     const VectorXd& contrast);

/// N^-1 sum_i Y*_i(d_i).
double population_value_serial(const LinearRule& rule, const MatrixXd& covariates, const MatrixXd& potential);
double population_value_omp(const LinearRule& rule, const MatrixXd& covariates, const MatrixXd& potential);

/// sum_i |c_i| 1{d(x_i) != 1{c_i > 0}}. With c_i = w_i tau_i this is the weighted 0-1 risk.
double misclassification_serial(const LinearRule& rule, const MatrixXd& covariates, const VectorXd& signed_cost);
double misclassification_omp(const LinearRule& rule, const MatrixXd& covariates, const VectorXd& signed_cost);

struct GridSpec {
  int resolution = 200;  // points per axis, end points included
  double lo = -1.0;
  double hi = 1.0;
};

struct OracleResult {
  LinearRule rule;
  double risk = 0.0;
  std::int64_t index = 0;  // position of the winner in enumeration order
  std::int64_t candidates = 0;
};

/// Exhaustive search of eta over the cube [lo, hi]^(p+1); ties go to the first point in
/// enumeration order (last coordinate fastest).
OracleResult grid_oracle_serial(const MatrixXd& covariates, const VectorXd& signed_cost, const GridSpec& grid = {});
OracleResult grid_oracle_omp(const MatrixXd& covariates, const VectorXd& signed_cost, const GridSpec& grid = {});

/// Two covariates only: for each of `angles` directions v on the half circle, sweeps every
/// threshold between consecutive projections v'x for both orientations of the halfspace.
OracleResult sweep_oracle_2d_serial(const MatrixXd& covariates, const VectorXd& signed_cost, int angles = 180);
OracleResult sweep_oracle_2d_omp(const MatrixXd& covariates, const VectorXd& signed_cost, int angles = 180);

}  // namespace itr::kernels
