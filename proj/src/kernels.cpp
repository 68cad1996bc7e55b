#include "itr/kernels.hpp"

#include "itr/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

namespace itr::kernels {

namespace {

void check_rule(const LinearRule& rule, const MatrixXd& covariates) {
  if (rule.dim() != covariates.cols()) {
    throw Error(ErrorKind::invalid_argument, "dimension-mismatch", "rule and covariates disagree in p");
  }
}

void check_rows(const MatrixXd& covariates, Index rows) {
  if (covariates.rows() != rows) {
    throw Error(ErrorKind::invalid_argument, "length-mismatch", "population arrays differ in length");
  }
}

inline int decide(const VectorXd& eta, const MatrixXd& x, Index i) {
  double f = eta[0];
  for (Index j = 0; j < x.cols(); ++j) f += eta[j + 1] * x(i, j);
  return f > 0.0 ? 1 : 0;
}

inline double mse_term(const VectorXd& eta, const MatrixXd& x, const MatrixXd& y, const VectorXd& tau, Index i) {
  const int d = decide(eta, x, i);
  const int best = tau[i] > 0.0 ? 1 : 0;
  const double gap = y(i, d) - y(i, best);
  return gap * gap;
}

inline double miss_term(const VectorXd& eta, const MatrixXd& x, const VectorXd& c, Index i) {
  if (c[i] == 0.0) return 0.0;
  return decide(eta, x, i) != (c[i] > 0.0 ? 1 : 0) ? std::abs(c[i]) : 0.0;
}

template <class Term>
double blocked_sum(Index n, Term term) {
  const Index blocks = (n + kBlockRows - 1) / kBlockRows;
  std::vector<double> partial(static_cast<std::size_t>(blocks), 0.0);
#pragma omp parallel for schedule(static)
  for (Index b = 0; b < blocks; ++b) {
    const Index end = std::min(n, (b + 1) * kBlockRows);
    double s = 0.0;
    for (Index i = b * kBlockRows; i < end; ++i) s += term(i);
    partial[static_cast<std::size_t>(b)] = s;
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

struct Best {
  double risk = std::numeric_limits<double>::infinity();
  std::int64_t index = -1;
  VectorXd eta;

  void offer(double r, std::int64_t k, const VectorXd& e) {
    if (r < risk || (r == risk && k < index)) {
      risk = r;
      index = k;
      eta = e;
    }
  }
  void merge(const Best& other) {
    if (other.index >= 0) offer(other.risk, other.index, other.eta);
  }
};

struct Grid {
  Index dims;
  std::int64_t res;
  std::int64_t prefixes;
  std::vector<double> axis;

  Grid(const MatrixXd& x, const GridSpec& spec) : dims(x.cols() + 1), res(spec.resolution) {
    if (x.cols() < 1 || spec.resolution < 2 || !(spec.hi > spec.lo)) {
      throw Error(ErrorKind::invalid_argument, "invalid-grid", "grid needs p >= 1, resolution >= 2 and lo < hi");
    }
    const double total = std::pow(static_cast<double>(res), static_cast<double>(dims));
    if (total > 1e11) {
      throw Error(ErrorKind::invalid_argument, "grid-too-large", "grid has too many points");
    }
    prefixes = 1;
    for (Index j = 0; j + 1 < dims; ++j) prefixes *= res;
    axis.resize(static_cast<std::size_t>(res));
    for (std::int64_t k = 0; k < res; ++k) {
      axis[static_cast<std::size_t>(k)] = spec.lo + (spec.hi - spec.lo) * static_cast<double>(k) / static_cast<double>(res - 1);
    }
  }

  // Scans every last-axis value behind one prefix of the other coordinates.
  void scan(std::int64_t prefix, const MatrixXd& x, const VectorXd& c, std::vector<double>& base, VectorXd& eta,
            Best& best) const {
    const Index p = x.cols();
    std::int64_t rest = prefix;
    for (Index j = dims - 2; j >= 0; --j) {
      eta[j] = axis[static_cast<std::size_t>(rest % res)];
      rest /= res;
    }
    for (Index i = 0; i < x.rows(); ++i) {
      double f = eta[0];
      for (Index j = 1; j < p; ++j) f += eta[j] * x(i, j - 1);
      base[static_cast<std::size_t>(i)] = f;
    }
    for (std::int64_t k = 0; k < res; ++k) {
      const double last = axis[static_cast<std::size_t>(k)];
      double r = 0.0;
      for (Index i = 0; i < x.rows(); ++i) {
        if (c[i] == 0.0) continue;
        const int d = base[static_cast<std::size_t>(i)] + last * x(i, p - 1) > 0.0 ? 1 : 0;
        if (d != (c[i] > 0.0 ? 1 : 0)) r += std::abs(c[i]);
      }
      const std::int64_t index = prefix * res + k;
      if (r < best.risk || (r == best.risk && index < best.index)) {
        eta[p] = last;
        best.offer(r, index, eta);
      }
    }
  }
};

OracleResult finish(const Best& best, std::int64_t candidates) {
  OracleResult out;
  out.rule = LinearRule(best.eta);
  out.risk = best.risk;
  out.index = best.index;
  out.candidates = candidates;
  return out;
}

struct Sweep {
  const MatrixXd& x;
  const VectorXd& c;
  int angles;
  double total_cost;
  double all_treated_cost;

  Sweep(const MatrixXd& cov, const VectorXd& cost, int a) : x(cov), c(cost), angles(a) {
    if (cov.cols() != 2 || a < 1) {
      throw Error(ErrorKind::invalid_argument, "invalid-sweep", "sweep oracle needs two covariates and angles >= 1");
    }
    total_cost = c.cwiseAbs().sum();
    all_treated_cost = 0.0;
    for (Index i = 0; i < c.size(); ++i) {
      if (c[i] < 0.0) all_treated_cost -= c[i];
    }
  }

  std::int64_t per_angle() const { return 2 * (x.rows() + 1); }

  void scan(int k, std::vector<Index>& order, std::vector<double>& z, Best& best) const {
    const double theta = std::numbers::pi * static_cast<double>(k) / static_cast<double>(angles);
    const double v1 = std::cos(theta), v2 = std::sin(theta);
    const Index n = x.rows();
    for (Index i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = v1 * x(i, 0) + v2 * x(i, 1);
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return z[static_cast<std::size_t>(a)] < z[static_cast<std::size_t>(b)]; });
    const std::int64_t first = static_cast<std::int64_t>(k) * per_angle();
    VectorXd eta(3);
    // Predict 1 iff v'x > t, starting with t below every projection.
    double r = all_treated_cost;
    double t = n > 0 ? z[static_cast<std::size_t>(order[0])] - 1.0 : 0.0;
    std::int64_t slot = 0;
    const auto offer = [&](double risk, double thr) {
      const std::int64_t up = first + 2 * slot, down = up + 1;
      if (risk < best.risk || (risk == best.risk && up < best.index)) {
        eta << -thr, v1, v2;
        best.offer(risk, up, eta);
      }
      const double comp = total_cost - risk;
      if (comp < best.risk || (comp == best.risk && down < best.index)) {
        eta << thr, -v1, -v2;
        best.offer(comp, down, eta);
      }
      ++slot;
    };
    offer(r, t);
    Index pos = 0;
    while (pos < n) {
      const double zv = z[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])];
      while (pos < n && z[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] == zv) {
        r += c[order[static_cast<std::size_t>(pos)]];
        ++pos;
      }
      t = pos < n ? 0.5 * (zv + z[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])]) : zv + 1.0;
      offer(r, t);
    }
  }
};

}  // namespace

double value_mse_serial(const LinearRule& rule, const MatrixXd& covariates, const MatrixXd& potential,
                        const VectorXd& contrast) {
  check_rule(rule, covariates);
  check_rows(covariates, potential.rows());
  check_rows(covariates, contrast.size());
  double total = 0.0;
  for (Index i = 0; i < covariates.rows(); ++i) total += mse_term(rule.eta(), covariates, potential, contrast, i);
  return total / static_cast<double>(covariates.rows());
}

double value_mse_omp(const LinearRule& rule, const MatrixXd& covariates, const MatrixXd& potential,
                     const VectorXd& contrast) {
  check_rule(rule, covariates);
  check_rows(covariates, potential.rows());
  check_rows(covariates, contrast.size());
  const VectorXd& eta = rule.eta();
  const double total = blocked_sum(covariates.rows(),
                                   [&](Index i) { return mse_term(eta, covariates, potential, contrast, i); });
  return total / static_cast<double>(covariates.rows());
}

double population_value_serial(const LinearRule& rule, const MatrixXd& covariates, const MatrixXd& potential) {
  check_rule(rule, covariates);
  check_rows(covariates, potential.rows());
  double total = 0.0;
  for (Index i = 0; i < covariates.rows(); ++i) total += potential(i, decide(rule.eta(), covariates, i));
  return total / static_cast<double>(covariates.rows());
}

double population_value_omp(const LinearRule& rule, const MatrixXd& covariates, const MatrixXd& potential) {
  check_rule(rule, covariates);
  check_rows(covariates, potential.rows());
  const VectorXd& eta = rule.eta();
  const double total =
      blocked_sum(covariates.rows(), [&](Index i) { return potential(i, decide(eta, covariates, i)); });
  return total / static_cast<double>(covariates.rows());
}

double misclassification_serial(const LinearRule& rule, const MatrixXd& covariates, const VectorXd& signed_cost) {
  check_rule(rule, covariates);
  check_rows(covariates, signed_cost.size());
  double total = 0.0;
  for (Index i = 0; i < covariates.rows(); ++i) total += miss_term(rule.eta(), covariates, signed_cost, i);
  return total;
}

double misclassification_omp(const LinearRule& rule, const MatrixXd& covariates, const VectorXd& signed_cost) {
  check_rule(rule, covariates);
  check_rows(covariates, signed_cost.size());
  const VectorXd& eta = rule.eta();
  return blocked_sum(covariates.rows(), [&](Index i) { return miss_term(eta, covariates, signed_cost, i); });
}

OracleResult grid_oracle_serial(const MatrixXd& covariates, const VectorXd& signed_cost, const GridSpec& spec) {
  check_rows(covariates, signed_cost.size());
  const Grid grid(covariates, spec);
  Best best;
  std::vector<double> base(static_cast<std::size_t>(covariates.rows()));
  VectorXd eta(grid.dims);
  for (std::int64_t prefix = 0; prefix < grid.prefixes; ++prefix) {
    grid.scan(prefix, covariates, signed_cost, base, eta, best);
  }
  return finish(best, grid.prefixes * grid.res);
}

OracleResult grid_oracle_omp(const MatrixXd& covariates, const VectorXd& signed_cost, const GridSpec& spec) {
  check_rows(covariates, signed_cost.size());
  const Grid grid(covariates, spec);
  Best best;
#pragma omp parallel
  {
    Best local;
    std::vector<double> base(static_cast<std::size_t>(covariates.rows()));
    VectorXd eta(grid.dims);
#pragma omp for schedule(static)
    for (std::int64_t prefix = 0; prefix < grid.prefixes; ++prefix) {
      grid.scan(prefix, covariates, signed_cost, base, eta, local);
    }
#pragma omp critical
    best.merge(local);
  }
  return finish(best, grid.prefixes * grid.res);
}

OracleResult sweep_oracle_2d_serial(const MatrixXd& covariates, const VectorXd& signed_cost, int angles) {
  check_rows(covariates, signed_cost.size());
  const Sweep sweep(covariates, signed_cost, angles);
  Best best;
  std::vector<Index> order(static_cast<std::size_t>(covariates.rows()));
  std::vector<double> z(order.size());
  for (int k = 0; k < angles; ++k) sweep.scan(k, order, z, best);
  return finish(best, sweep.per_angle() * angles);
}

OracleResult sweep_oracle_2d_omp(const MatrixXd& covariates, const VectorXd& signed_cost, int angles) {
  check_rows(covariates, signed_cost.size());
  const Sweep sweep(covariates, signed_cost, angles);
  Best best;
#pragma omp parallel
  {
    Best local;
    std::vector<Index> order(static_cast<std::size_t>(covariates.rows()));
    std::vector<double> z(order.size());
#pragma omp for schedule(dynamic)
    for (int k = 0; k < angles; ++k) sweep.scan(k, order, z, local);
#pragma omp critical
    best.merge(local);
  }
  return finish(best, sweep.per_angle() * angles);
}

}  // namespace itr::kernels
