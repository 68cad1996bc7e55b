#include "doctest.h"

#include "itr/error.hpp"
#include "itr/evaluation.hpp"

#include <cmath>
#include <random>

using namespace itr;

namespace {

NuisanceFit zero_q(double pi = 0.5, Index p = 1) {
  NuisanceFit fit;
  fit.outcome.beta = VectorXd::Zero(2 * p + 2);
  fit.propensity.constant = pi;
  return fit;
}

}  // namespace

TEST_CASE("two-row hand example gives 4") {
  // Rows (A=1, Y=4, d=1) and (A=0, Y=2, d=1): 0.5 * 4/0.5 + 0.5 * 0 = 4.
  MatrixXd x(2, 1);
  x << 1.0, 2.0;
  const ExperimentalSample exp(x, (VectorXd(2) << 1, 0).finished(), (VectorXd(2) << 4, 2).finished());
  const LinearRule treat_all((VectorXd(2) << 1.0, 0.0).finished());
  CHECK(value_aipw_weighted(treat_all, exp, TransferWeights::uniform(2), zero_q()).value ==
        doctest::Approx(4.0).epsilon(1e-15));
  CHECK(value_aipw_unweighted(treat_all, exp, zero_q()).value == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("zero Q with pi = 1/2 reduces to 2/n sum Y 1{A = d}") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  const Index n = 15;
  MatrixXd x(n, 1);
  VectorXd a(n), y(n);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = nd(rng);
    a[i] = i % 2;
    y[i] = nd(rng);
  }
  const ExperimentalSample exp(x, a, y);
  const LinearRule rule((VectorXd(2) << 0.1, 1.0).finished());
  double expected = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double d = 0.1 + x(i, 0) > 0.0 ? 1.0 : 0.0;
    if (a[i] == d) expected += 2.0 * y[i] / n;
  }
  CHECK(value_aipw_unweighted(rule, exp, zero_q()).value == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("exact outcome model: value is the weighted mean of Q(x, d)") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  const Index n = 12;
  MatrixXd x(n, 1);
  VectorXd a(n), y(n), w(n);
  NuisanceFit fit;
  fit.outcome.beta = (VectorXd(4) << 1.0, -0.5, 2.0, 0.7).finished();
  fit.propensity.constant = 0.4;
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = nd(rng);
    a[i] = i % 3 == 0;
    y[i] = fit.q(x.row(i).transpose(), a[i]);
    w[i] = 0.2 + std::abs(nd(rng));
  }
  const ExperimentalSample exp(x, a, y);
  const auto tw = TransferWeights::normalized(w, WeightMethod::nonparametric);
  const LinearRule rule((VectorXd(2) << -0.2, 1.0).finished());
  double expected = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double d = -0.2 + x(i, 0) > 0.0 ? 1.0 : 0.0;
    expected += tw[i] * fit.q(x.row(i).transpose(), d);
  }
  CHECK(value_aipw_weighted(rule, exp, tw, fit).value == doctest::Approx(expected).epsilon(1e-13));
  CHECK(value_aipw_weighted(rule, exp, tw, fit, AugmentationSign::verbatim).value ==
        doctest::Approx(-expected).epsilon(1e-13));
}

TEST_CASE("weighted value requires sum-to-one weights") {
  MatrixXd x(2, 1);
  x << 1.0, 2.0;
  const ExperimentalSample exp(x, (VectorXd(2) << 1, 0).finished(), (VectorXd(2) << 4, 2).finished());
  const TransferWeights raw((VectorXd(2) << 3.0, 5.0).finished(), WeightScale::mean_inverse_score, WeightMethod::mle);
  try {
    value_aipw_weighted(LinearRule(VectorXd::Ones(2)), exp, raw, zero_q());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == "weight-scale");
  }
}

TEST_CASE("population measures on a simulated draw") {
  SimulationConfig cfg;
  cfg.population_size = 20000;
  cfg.alpha0 = -3.0;
  cfg.seed = 4;
  const auto draw = simulate_population(cfg);
  const LinearRule oracle((VectorXd(3) << 1.0, 2.0, 3.0).finished());
  CHECK(value_mse(oracle, draw) == 0.0);
  CHECK(population_risk(oracle, draw.covariates, draw.contrast) == 0.0);
  const LinearRule none((VectorXd(3) << -1.0, 0.0, 0.0).finished());
  CHECK(population_value(none, draw) == doctest::Approx(draw.potential_outcomes.col(0).mean()).epsilon(1e-12));
  CHECK(value_mse(none, draw) > 0.0);
}

TEST_CASE("probe: exact rule has zero gap and runs reproduce") {
  ProbeConfig cfg;
  cfg.sizes = {2000};
  cfg.replicates = 2;
  cfg.evaluation_size = 5000;
  cfg.oracle_angles = 60;
  cfg.seed = 3;
  CHECK(probe_gap(LinearRule((VectorXd(3) << 1.0, 2.0, 3.0).finished()), Setting::III, cfg) == 0.0);
  CHECK(probe_gap(LinearRule((VectorXd(3) << 0.0, 1.0, -1.0).finished()), Setting::III, cfg) > 0.0);
  const auto a = risk_consistency_probe(cfg);
  const auto b = risk_consistency_probe(cfg);
  REQUIRE(a.rows.size() == 2);
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    CHECK(a.rows[k].ok);
    CHECK(a.rows[k].gap >= 0.0);
    CHECK(a.rows[k].risk == b.rows[k].risk);
  }
}
