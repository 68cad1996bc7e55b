#include "doctest.h"

#include "itr/error.hpp"
#include "itr/policy_dc.hpp"

#include "../support.hpp"

#include <cmath>
#include <limits>

using namespace itr;

TEST_CASE("ramp loss branches") {
  CHECK(ramp_loss(2.0) == 0.0);
  CHECK(ramp_loss(-3.0) == 2.0);
  CHECK(ramp_loss(-0.5) == doctest::Approx(1.75).epsilon(1e-15));
  CHECK(ramp_loss(0.5) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(ramp_loss(0.0) == 1.0);
  CHECK(ramp_loss(-0.25, {2.0, 2.0}) == doctest::Approx(1.75 / 2.0));
}

TEST_CASE("convex components") {
  CHECK(ramp_component(1.0, 1) == 0.0);
  CHECK(ramp_component(0.0, 0) == 0.0);
  CHECK(ramp_component(-1.0, 0) == doctest::Approx(1.0));
  CHECK(ramp_component(-0.5, 1) - ramp_component(-0.5, 0) == doctest::Approx(1.75));
  for (int s : {0, 1}) {
    for (double u : {-2.3, -0.7, 0.2, 0.9, 1.4}) {
      const double h = 1e-6;
      const double fd = (ramp_component(u + h, s) - ramp_component(u - h, s)) / (2.0 * h);
      CHECK(ramp_component_derivative(u, s) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("rule prediction uses a strict inequality") {
  const LinearRule r((VectorXd(2) << -1.0, 1.0).finished());
  CHECK(predict(r, VectorXd::Constant(1, 2.0)) == 1);
  CHECK(predict(r, VectorXd::Constant(1, 1.0)) == 0);
  const LinearRule s((VectorXd(3) << 0.0, 1.0, -2.0).finished());
  CHECK(predict(s, (VectorXd(2) << 3.0, 1.0).finished()) == 1);
}

TEST_CASE("empirical risk examples") {
  MatrixXd x(3, 1);
  x << -1.0, 0.5, 2.0;
  const VectorXd w = (VectorXd(3) << 0.3, 0.3, 0.4).finished();
  const VectorXd tau = (VectorXd(3) << -1.0, 1.0, 1.0).finished();
  // Agrees with the sign of tau everywhere with margins >= 1.
  const LinearRule good((VectorXd(2) << 0.0, 4.0).finished());
  CHECK(empirical_risk(good, x, w, 1.0, tau, RiskLoss::smoothed()) == 0.0);
  CHECK(empirical_risk(good, x, w, 1.0, tau, RiskLoss::zero_one()) == 0.0);
  // Flips the first row only: contribution w |tau| = 0.3.
  const LinearRule flip((VectorXd(2) << 5.0, 0.0).finished());
  CHECK(empirical_risk(flip, x, w, 1.0, tau, RiskLoss::zero_one()) == doctest::Approx(0.3));
  CHECK(empirical_risk(flip, x, w, 1.0, VectorXd::Zero(3), RiskLoss::zero_one()) == 0.0);
  CHECK(risk_scale(WeightScale::sum_to_one, 10) == 1.0);
  CHECK(risk_scale(WeightScale::mean_inverse_score, 10) == doctest::Approx(0.1));
}

TEST_CASE("degenerate objective returns the start") {
  const auto in = itr::testing::random_instance(1);
  const LinearRule init((VectorXd(3) << 0.2, -0.4, 0.1).finished());
  const auto rep = dc_fit(in.x, in.w, 1.0, VectorXd::Zero(in.x.rows()), init);
  CHECK(rep.degenerate);
  CHECK(rep.converged);
  CHECK(same_halfspace(rep.rule, init));
}

TEST_CASE("one-dimensional separable instance is classified perfectly") {
  const Index n = 12;
  MatrixXd x(n, 1);
  VectorXd tau(n);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = -2.75 + 0.5 * static_cast<double>(i);
    tau[i] = x(i, 0) > 0.0 ? 1.0 : -1.0;
  }
  const VectorXd w = VectorXd::Constant(n, 1.0 / n);
  const auto fit = fit_rule_multistart(x, w, 1.0, tau);
  CHECK(empirical_risk(fit.best.rule, x, w, 1.0, tau, RiskLoss::zero_one()) == 0.0);
  // Exhaustive grid over (eta0, eta1) confirms zero is the minimum.
  double best = std::numeric_limits<double>::infinity();
  for (int a = -50; a <= 50; ++a) {
    for (int b = -50; b <= 50; ++b) {
      const LinearRule r((VectorXd(2) << a / 50.0, b / 50.0).finished());
      best = std::min(best, empirical_risk(r, x, w, 1.0, tau, RiskLoss::zero_one()));
    }
  }
  CHECK(best == 0.0);
}

TEST_CASE("d.c. trace is non-increasing and converged runs meet the tolerance") {
  for (int k = 0; k < 20; ++k) {
    const auto in = itr::testing::random_instance(300 + k);
    DcOptions opts;
    if (k % 2) opts.xi_start = DcOptions::XiStart::from_init;
    const auto rep = dc_fit(in.x, in.w, 1.0, in.tau, LinearRule(VectorXd::Ones(3)), opts);
    for (std::size_t t = 1; t < rep.objective_trace.size(); ++t) {
      CHECK(rep.objective_trace[t] <= rep.objective_trace[t - 1] + 1e-10);
    }
    if (rep.converged) CHECK(rep.xi_change <= opts.tolerance);
    CHECK(rep.inner_iterations.size() == rep.objective_trace.size());
    CHECK(rep.rule.eta().cwiseAbs().maxCoeff() == doctest::Approx(1.0));
  }
}

TEST_CASE("multi-start is deterministic and keeps the best objective") {
  const auto in = itr::testing::random_instance(42);
  MultiStartOptions opts;
  opts.seed = 9;
  const auto a = fit_rule_multistart(in.x, in.w, 1.0, in.tau, opts);
  const auto b = fit_rule_multistart(in.x, in.w, 1.0, in.tau, opts);
  CHECK(a.best.eta_raw == b.best.eta_raw);
  CHECK(a.start_objectives.size() == 6);
  for (double obj : a.start_objectives) CHECK(a.best.objective <= obj + 1e-12 * (1.0 + std::abs(obj)));
}

TEST_CASE("invalid inputs are rejected") {
  const auto in = itr::testing::random_instance(5);
  CHECK_THROWS_AS(dc_fit(in.x, in.w, 1.0, in.tau, LinearRule(VectorXd::Ones(2))), Error);
  CHECK_THROWS_AS((RampLossParams{0.0, 1.0}.validate()), Error);
  CHECK_THROWS_AS(dc_fit(in.x, in.w.head(3), 1.0, in.tau, LinearRule(VectorXd::Ones(3))), Error);
}
