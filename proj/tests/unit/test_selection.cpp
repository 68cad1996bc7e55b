#include "doctest.h"

#include "itr/error.hpp"
#include "itr/selection.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <random>

using namespace itr;

namespace {

struct Toy {
  ExperimentalSample exp;
  TargetSample rwd;
};

Toy toy(Index n = 40, Index m = 30) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  MatrixXd x(n, 1), z(m, 1);
  VectorXd a(n), y(n);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = nd(rng);
    a[i] = i % 2;
    y[i] = nd(rng);
  }
  for (Index i = 0; i < m; ++i) z(i, 0) = nd(rng);
  return {ExperimentalSample(x, a, y), TargetSample(z)};
}

CandidateMethod constant_rule(std::string name, double eta0) {
  return {std::move(name), [eta0](const ExperimentalSample&, const TargetSample&, std::optional<double>) {
            return LinearRule((VectorXd(2) << eta0, 0.0).finished());
          }};
}

// Scores a rule by its intercept, so each stub has a known value on every split.
EvaluatorFactory intercept_evaluator() {
  return [](const ExperimentalSample&, const TargetSample&) -> SplitEvaluator {
    return [](const LinearRule& r) { return r.eta()[0]; };
  };
}

}  // namespace

TEST_CASE("split halves") {
  const auto [a, b] = split_halves(10, 1);
  CHECK(a.size() == 5);
  CHECK(b.size() == 5);
  const auto [c, d] = split_halves(11, 1);
  CHECK(c.size() == 6);
  CHECK(d.size() == 5);
  std::vector<Index> all(c);
  all.insert(all.end(), d.begin(), d.end());
  std::sort(all.begin(), all.end());
  for (Index i = 0; i < 11; ++i) CHECK(all[static_cast<std::size_t>(i)] == i);
  CHECK(split_halves(11, 1).first == c);
  CHECK(split_halves(11, 2).first != c);
  CHECK_THROWS_AS(split_halves(1, 1), Error);
}

TEST_CASE("stub candidates: the largest mean value wins") {
  const auto t = toy();
  const auto r = cross_validate_candidates(
      t.exp, t.rwd, {constant_rule("low", 0.1), constant_rule("high", 0.9), constant_rule("mid", 0.5)},
      intercept_evaluator(), 5, 11, std::nullopt);
  CHECK(r.winner == 1);
  CHECK(r.winner_name == "high");
  CHECK(r.means[0] == doctest::Approx(0.1));
  CHECK(r.values.size() == 5);
  CHECK(r.rule.eta()[0] == 0.9);
}

TEST_CASE("stub candidates: ties go to the earlier candidate") {
  const auto t = toy();
  const auto r = cross_validate_candidates(t.exp, t.rwd, {constant_rule("a", 0.5), constant_rule("b", 0.5)},
                                           intercept_evaluator(), 3, 2, std::nullopt);
  CHECK(r.winner == 0);
}

TEST_CASE("a single candidate is returned") {
  const auto t = toy();
  const auto r =
      cross_validate_candidates(t.exp, t.rwd, {constant_rule("only", -0.3)}, intercept_evaluator(), 2, 2, std::nullopt);
  CHECK(r.winner_name == "only");
}

TEST_CASE("candidates missing on more than half of the splits are disqualified") {
  const auto t = toy();
  std::atomic<int> calls{0};
  CandidateMethod flaky{"flaky", [&calls](const ExperimentalSample&, const TargetSample&, std::optional<double>) {
                          if (++calls % 4 != 0) throw Error(ErrorKind::convergence, "stub", "stub failure");
                          return LinearRule((VectorXd(2) << 5.0, 0.0).finished());
                        }};
  std::mutex lock;
  std::vector<double> seen;
  CandidateMethod sized{"sized", [&](const ExperimentalSample&, const TargetSample&, std::optional<double> n) {
                          const std::lock_guard<std::mutex> guard(lock);
                          seen.push_back(n.value_or(-1.0));
                          return LinearRule((VectorXd(2) << 0.2, 0.0).finished());
                        }};
  const auto r = cross_validate_candidates(t.exp, t.rwd, {flaky, sized}, intercept_evaluator(), 4, 2, 100.0);
  CHECK(r.disqualified[0]);
  CHECK(std::isnan(r.means[0]));
  CHECK(r.winner_name == "sized");
  CHECK(!r.diagnostics.empty());
  // Four split fits see N/2; the final refit on the full data sees N.
  REQUIRE(seen.size() == 5);
  for (std::size_t k = 0; k < 4; ++k) CHECK(seen[k] == 50.0);
  CHECK(seen[4] == 100.0);
}

TEST_CASE("every candidate disqualified is an error") {
  const auto t = toy();
  CandidateMethod broken{"broken", [](const ExperimentalSample&, const TargetSample&, std::optional<double>) -> LinearRule {
                           throw Error(ErrorKind::convergence, "stub", "stub failure");
                         }};
  CHECK_THROWS_AS(cross_validate_candidates(t.exp, t.rwd, {broken}, intercept_evaluator(), 3, 1, std::nullopt), Error);
  CHECK_THROWS_AS(cross_validate_candidates(t.exp, t.rwd, {}, intercept_evaluator(), 3, 1, std::nullopt), Error);
}

TEST_CASE("candidate names and catalogs") {
  CHECK(candidate_kind_from_string("np") == CandidateKind::nonparametric);
  CHECK(candidate_kind_from_string("w1") == CandidateKind::mle);
  CHECK(candidate_kind_from_string("w2") == CandidateKind::ee);
  CHECK(candidate_kind_from_string("unweight") == CandidateKind::unweighted);
  CHECK_THROWS_AS(candidate_kind_from_string("bogus"), Error);
  CHECK(MethodCatalog::standard(false).methods.size() == 2);
  CHECK(MethodCatalog::standard(true).methods.size() == 4);
  const auto t = toy();
  CHECK_THROWS_AS(cross_validate(t.exp, t.rwd, MethodCatalog::standard(true), 2, 1, std::nullopt), Error);
}
