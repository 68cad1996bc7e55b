#include "itr/optim.hpp"

#include "itr/error.hpp"

#include <cmath>
#include <deque>

namespace itr::optim {

std::string to_string(Status status) {
  switch (status) {
    case Status::converged: return "converged";
    case Status::max_iterations: return "max_iterations";
    case Status::line_search_failed: return "line_search_failed";
    case Status::non_finite: return "non_finite";
    case Status::diverged: return "diverged";
  }
  return "unknown";
}

namespace {

struct Correction {
  VectorXd s;
  VectorXd y;
  double rho;
};

VectorXd two_loop(const std::deque<Correction>& memory, const VectorXd& g) {
  VectorXd q = -g;
  std::vector<double> alpha(memory.size());
  for (std::size_t k = memory.size(); k-- > 0;) {
    alpha[k] = memory[k].rho * memory[k].s.dot(q);
    q -= alpha[k] * memory[k].y;
  }
  if (!memory.empty()) {
    const auto& last = memory.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t k = 0; k < memory.size(); ++k) {
    const double beta = memory[k].rho * memory[k].y.dot(q);
    q += (alpha[k] - beta) * memory[k].s;
  }
  return q;
}

bool rounding_level(double f_new, double f_old) {
  return std::abs(f_new - f_old) <= 1e-14 * (1.0 + std::abs(f_old));
}

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& f, VectorXd x0, const LbfgsOptions& options) {
  LbfgsResult result;
  VectorXd x = std::move(x0);
  VectorXd g(x.size());
  double fx = f(x, g);
  if (!std::isfinite(fx) || !g.allFinite()) {
    result.x = x;
    result.value = fx;
    result.status = Status::non_finite;
    return result;
  }

  std::deque<Correction> memory;
  VectorXd x_new(x.size()), g_new(x.size());
  result.status = Status::max_iterations;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
      result.status = Status::converged;
      break;
    }
    VectorXd d = two_loop(memory, g);
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      memory.clear();
      d = -g;
      slope = -g.squaredNorm();
    }
    double step = memory.empty() ? std::min(1.0, 1.0 / g.norm()) : 1.0;

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      for (int bt = 0; bt < options.max_backtracks; ++bt) {
        x_new = x + step * d;
        const double f_new = f(x_new, g_new);
        if (std::isfinite(f_new) && g_new.allFinite() &&
            (f_new <= fx + options.armijo * step * slope ||
             (f_new <= fx && rounding_level(f_new, fx) && g_new.norm() < g.norm()))) {
          accepted = true;
          const VectorXd s = x_new - x;
          const VectorXd y = g_new - g;
          const double sy = s.dot(y);
          if (sy > 1e-12 * y.squaredNorm() && sy > 0.0) {
            memory.push_back({s, y, 1.0 / sy});
            if (static_cast<int>(memory.size()) > options.memory) memory.pop_front();
          }
          x.swap(x_new);
          g.swap(g_new);
          fx = f_new;
          break;
        }
        step *= 0.5;
      }
      if (!accepted && !memory.empty()) {
        // Retry once along steepest descent.
        memory.clear();
        d = -g;
        slope = -g.squaredNorm();
        step = std::min(1.0, 1.0 / g.norm());
      } else if (!accepted) {
        break;
      }
    }
    if (!accepted) {
      result.status = Status::line_search_failed;
      break;
    }
  }
  if (result.status == Status::max_iterations && g.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
    result.status = Status::converged;
  }
  result.x = std::move(x);
  result.value = fx;
  result.gradient_norm = g.lpNorm<Eigen::Infinity>();
  result.iterations = it;
  return result;
}

NewtonResult minimize_newton(const SecondOrderObjective& f, VectorXd x0, const NewtonOptions& options) {
  NewtonResult result;
  VectorXd x = std::move(x0);
  const Eigen::Index k = x.size();
  VectorXd g(k), g_new(k);
  MatrixXd h(k, k), h_new(k, k);
  double fx = f(x, g, h);
  if (!std::isfinite(fx) || !g.allFinite()) {
    result.x = x;
    result.status = Status::non_finite;
    return result;
  }
  result.status = Status::max_iterations;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= options.tolerance) {
      result.status = Status::converged;
      break;
    }
    VectorXd d;
    double ridge = 0.0;
    for (int attempt = 0; attempt < 30; ++attempt) {
      MatrixXd hr = h;
      if (ridge > 0.0) hr.diagonal().array() += ridge;
      Eigen::LDLT<MatrixXd> ldlt(hr);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        d = ldlt.solve(-g);
        if (d.allFinite() && g.dot(d) < 0.0) break;
      }
      ridge = ridge == 0.0 ? 1e-10 * (1.0 + h.diagonal().cwiseAbs().maxCoeff()) : ridge * 10.0;
      d.resize(0);
    }
    if (d.size() == 0) {
      d = -g;
    }
    const double slope = g.dot(d);
    double step = 1.0;
    bool accepted = false;
    VectorXd x_new;
    for (int bt = 0; bt < options.max_halvings; ++bt) {
      x_new = x + step * d;
      const double f_new = f(x_new, g_new, h_new);
      if (std::isfinite(f_new) && g_new.allFinite() &&
          (f_new <= fx + 1e-4 * step * slope ||
           (f_new <= fx + 1e-14 * (1.0 + std::abs(fx)) && g_new.norm() < g.norm()))) {
        accepted = true;
        x.swap(x_new);
        g.swap(g_new);
        h.swap(h_new);
        fx = f_new;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      result.status = Status::line_search_failed;
      break;
    }
    if (x.lpNorm<Eigen::Infinity>() > options.divergence_bound) {
      result.status = Status::diverged;
      break;
    }
  }
  if (result.status == Status::max_iterations && g.lpNorm<Eigen::Infinity>() <= options.tolerance) {
    result.status = Status::converged;
  }
  result.x = std::move(x);
  result.value = fx;
  result.gradient_norm = g.lpNorm<Eigen::Infinity>();
  result.iterations = it;
  return result;
}

NewtonResult solve_newton(const ResidualSystem& r, VectorXd x0, const NewtonOptions& options) {
  NewtonResult result;
  VectorXd x = std::move(x0);
  MatrixXd jac, jac_new;
  VectorXd res = r(x, jac);
  result.status = Status::max_iterations;
  if (!res.allFinite()) {
    result.x = x;
    result.status = Status::non_finite;
    return result;
  }
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (res.lpNorm<Eigen::Infinity>() <= options.tolerance) {
      result.status = Status::converged;
      break;
    }
    Eigen::FullPivLU<MatrixXd> lu(jac);
    if (!lu.isInvertible()) {
      throw Error(ErrorKind::convergence, "singular-jacobian",
                  "Jacobian is singular at iteration " + std::to_string(it));
    }
    const VectorXd d = lu.solve(-res);
    const double norm0 = res.norm();
    double step = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < options.max_halvings; ++bt) {
      const VectorXd x_new = x + step * d;
      VectorXd res_new = r(x_new, jac_new);
      if (res_new.allFinite() && res_new.norm() <= (1.0 - 1e-4 * step) * norm0) {
        x = x_new;
        res = std::move(res_new);
        jac.swap(jac_new);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      result.status = Status::line_search_failed;
      break;
    }
    if (x.lpNorm<Eigen::Infinity>() > options.divergence_bound) {
      result.status = Status::diverged;
      break;
    }
  }
  if (result.status == Status::max_iterations && res.lpNorm<Eigen::Infinity>() <= options.tolerance) {
    result.status = Status::converged;
  }
  result.x = std::move(x);
  result.gradient_norm = res.lpNorm<Eigen::Infinity>();
  result.value = res.norm();
  result.iterations = it;
  return result;
}

}  // namespace itr::optim
