#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace itr::optim {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Status { converged, max_iterations, line_search_failed, non_finite, diverged };

std::string to_string(Status status);

struct LbfgsOptions {
  int memory = 8;
  int max_iterations = 500;
  double gradient_tolerance = 1e-8;  // infinity norm
  double armijo = 1e-4;
  int max_backtracks = 60;
};

struct LbfgsResult {
  VectorXd x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  Status status = Status::max_iterations;
};

/// f(x, grad) returns the value and writes the gradient.
using Objective = std::function<double(const VectorXd&, VectorXd&)>;

/// Limited-memory BFGS with backtracking (sufficient decrease) line search.
/// The returned point never has a larger objective than x0.
LbfgsResult minimize_lbfgs(const Objective& f, VectorXd x0, const LbfgsOptions& options = {});

struct NewtonOptions {
  int max_iterations = 200;
  double tolerance = 1e-8;  // infinity norm of gradient / residual
  int max_halvings = 60;
  double divergence_bound = 1e6;  // |x|_inf beyond this is treated as divergence
};

struct NewtonResult {
  VectorXd x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  Status status = Status::max_iterations;
};

/// f(x, grad, hess) for a convex objective.
using SecondOrderObjective = std::function<double(const VectorXd&, VectorXd&, MatrixXd&)>;

/// Damped Newton for smooth convex minimization, backtracking on f.
NewtonResult minimize_newton(const SecondOrderObjective& f, VectorXd x0, const NewtonOptions& options = {});

/// r(x, jacobian) returns the residual vector.
using ResidualSystem = std::function<VectorXd(const VectorXd&, MatrixXd&)>;

/// Damped Newton root finding; step halving on the residual norm.
/// Throws itr::Error (convergence) on a singular Jacobian.
NewtonResult solve_newton(const ResidualSystem& r, VectorXd x0, const NewtonOptions& options = {});

}  // namespace itr::optim
