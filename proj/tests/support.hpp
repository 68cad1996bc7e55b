#pragma once

#include "itr/data.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace itr::testing {

struct Instance {
  MatrixXd x;
  VectorXd w;    // sum-to-one
  VectorXd tau;
};

// Two covariates, noisy linear contrast, Dirichlet(1) weights.
inline Instance random_instance(std::uint64_t seed, Index n = 20) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::exponential_distribution<double> expo(1.0);
  Instance in{MatrixXd(n, 2), VectorXd(n), VectorXd(n)};
  const double a = normal(rng), b = normal(rng), c = normal(rng);
  for (Index i = 0; i < n; ++i) {
    in.x(i, 0) = normal(rng);
    in.x(i, 1) = normal(rng);
    in.tau[i] = a + b * in.x(i, 0) + c * in.x(i, 1) + normal(rng);
    in.w[i] = expo(rng);
  }
  in.w /= in.w.sum();
  return in;
}

// Sample mean and standard error.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v) {
  MeanSe out;
  if (v.empty()) return out;
  double s = 0.0;
  for (double x : v) s += x;
  out.mean = s / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  if (v.size() > 1) out.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  return out;
}

}  // namespace itr::testing
