#include "doctest.h"

#include "itr/csv.hpp"
#include "itr/data.hpp"
#include "itr/error.hpp"

#include "scratch_dir.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

using namespace itr;
using itr::testing::ScratchDir;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("csv parsing handles quotes and strict numbers") {
  std::istringstream in("a,\"b,c\",d\n1,\"x,y\",NA\n");
  const auto t = csv::parse(in);
  REQUIRE(t.header.size() == 3);
  CHECK(t.header[1] == "b,c");
  CHECK(t.rows[0][1] == "x,y");
  CHECK(t.column("d").value() == 2);
  CHECK_FALSE(t.column("e").has_value());
  CHECK(csv::to_number("2.5").value() == 2.5);
  CHECK_FALSE(csv::to_number("NA").has_value());
  CHECK_FALSE(csv::to_number("").has_value());
  CHECK_FALSE(csv::to_number("3x").has_value());
}

TEST_CASE("csv format round-trips doubles") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789, 6.02214076e23}) {
    CHECK(std::stod(csv::format(x)) == x);
  }
}

TEST_CASE("three-row experimental csv with custom columns") {
  ScratchDir dir("data");
  write_file(dir / "e.csv", "age,treat,earn\n20,1,3.5\n30,0,2.0\n40,1,1.0\n");
  ColumnSchema schema;
  schema.treatment = "treat";
  schema.outcome = "earn";
  const auto exp = load_experimental(dir / "e.csv", schema);
  CHECK(exp.size() == 3);
  CHECK(exp.dim() == 1);
  CHECK(exp.names() == std::vector<std::string>{"age"});
  CHECK(exp.covariates()(2, 0) == 40.0);
  CHECK(exp.treatment()[1] == 0.0);
  CHECK(exp.outcome()[0] == 3.5);
}

TEST_CASE("non-binary treatment is rejected") {
  ScratchDir dir("data");
  write_file(dir / "e.csv", "age,treat,earn\n20,1,3.5\n30,2,2.0\n40,0,1.0\n");
  ColumnSchema schema;
  schema.treatment = "treat";
  schema.outcome = "earn";
  try {
    load_experimental(dir / "e.csv", schema);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == "non-binary-treatment");
    CHECK(e.kind() == ErrorKind::schema);
  }
}

TEST_CASE("missing column and non-numeric cell are schema errors") {
  ScratchDir dir("data");
  write_file(dir / "e.csv", "x,A,Y\n1,1,2\n2,0,oops\n");
  try {
    load_experimental(dir / "e.csv");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == "non-numeric-cell");
  }
  write_file(dir / "t.csv", "x\n1\n2\n");
  CHECK_THROWS_AS(load_target(dir / "t.csv", {"z"}), Error);
}

TEST_CASE("NSW-schema file loads with eight covariates") {
  ColumnSchema schema;
  schema.treatment = "treat";
  schema.outcome = "log.Re78";
  const auto exp = load_experimental(ITR_TEST_DATA_DIR "/nsw_sample.csv", schema);
  CHECK(exp.dim() == 8);
  CHECK(exp.size() == 8);
  CHECK(exp.names().front() == "age");
  CHECK(exp.names().back() == "log.Re75");
}

TEST_CASE("linear rule canonicalization and halfspaces") {
  const LinearRule r((VectorXd(3) << 2.0, -4.0, 1.0).finished());
  CHECK(r.canonical().eta()[1] == -1.0);
  CHECK(r.canonical().eta()[0] == 0.5);
  CHECK(same_halfspace(r, LinearRule((VectorXd(3) << 1.0, -2.0, 0.5).finished())));
  CHECK_FALSE(same_halfspace(r, LinearRule((VectorXd(3) << -2.0, 4.0, -1.0).finished())));
  const LinearRule zero(VectorXd::Zero(2));
  CHECK(zero.canonical().eta().isZero());
}

TEST_CASE("transfer weights normalization") {
  const auto w = TransferWeights::normalized((VectorXd(2) << 10.0, 5.0).finished(), WeightMethod::truth);
  CHECK(w[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(w[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(w.scale() == WeightScale::sum_to_one);
  const auto u = TransferWeights::uniform(4);
  CHECK(u.values().isApprox(VectorXd::Constant(4, 0.25)));
  CHECK_THROWS_AS(TransferWeights((VectorXd(2) << 0.5, 0.6).finished(), WeightScale::sum_to_one, WeightMethod::mle),
                  Error);
}

TEST_CASE("setting III noise-free contrast is exact per row") {
  SimulationConfig cfg;
  cfg.population_size = 50000;
  cfg.rwd_size = 100;
  cfg.alpha0 = -3.0;
  cfg.seed = 11;
  const auto draw = simulate_population(cfg);
  double sum = 0.0, sum_sq = 0.0;
  for (Index i = 0; i < draw.population_size(); ++i) {
    const double x1 = draw.covariates(i, 0), x2 = draw.covariates(i, 1);
    CHECK(draw.contrast[i] == 1.0 + 2.0 * x1 + 3.0 * x2);
    const double e = draw.potential_outcomes(i, 1) - draw.potential_outcomes(i, 0) - draw.contrast[i];
    sum += e;
    sum_sq += e * e;
  }
  // Arm noises are independent N(0, 0.5^2), so Y*(1) - Y*(0) - tau has variance 0.5.
  const double n = static_cast<double>(draw.population_size());
  CHECK(std::abs(sum / n) <= 4.0 * std::sqrt(0.5 / n));
  CHECK(sum_sq / n == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("contrast functions of the three settings") {
  const double x1 = 0.3, x2 = -0.7;
  CHECK(true_contrast(Setting::I, x1, x2) == doctest::Approx(std::atan(std::exp(1.0 + x1) - 3.0 * x2 - 5.0)));
  CHECK(true_contrast(Setting::II, x1, x2) ==
        doctest::Approx(std::cos(1.0) + std::cos(x1) + std::cos(x2) - 1.5));
  CHECK(true_contrast(Setting::III, x1, x2) == doctest::Approx(1.0 + 2.0 * x1 + 3.0 * x2));
}

TEST_CASE("simulation is deterministic and the covariate mean is near (1, 1)") {
  SimulationConfig cfg;
  cfg.population_size = 200000;
  cfg.seed = 5;
  const auto a = simulate_population(cfg);
  const auto b = simulate_population(cfg);
  CHECK(a.covariates == b.covariates);
  CHECK(a.experimental_rows == b.experimental_rows);
  CHECK(a.target_rows == b.target_rows);
  const double bound = 4.0 / std::sqrt(static_cast<double>(cfg.population_size));
  CHECK(std::abs(a.covariates.col(0).mean() - 1.0) <= bound);
  CHECK(std::abs(a.covariates.col(1).mean() - 1.0) <= bound);
  CHECK(static_cast<Index>(a.target_rows.size()) == cfg.rwd_size);
}

TEST_CASE("experimental size at N = 1e6 is near the expected 1386") {
  // E[pi_S] under X ~ N((1,1), I) and the default score, by quadrature over the linear index
  // t = -8 + x1 - 2 x2 ~ N(-9, 5).
  double expected = 0.0;
  const int steps = 20000;
  const double sd = std::sqrt(5.0), lo = -9.0 - 10.0 * sd, hi = -9.0 + 10.0 * sd, h = (hi - lo) / steps;
  for (int k = 0; k < steps; ++k) {
    const double t = lo + (k + 0.5) * h;
    const double dens = std::exp(-0.5 * (t + 9.0) * (t + 9.0) / 5.0) / std::sqrt(2.0 * M_PI * 5.0);
    expected += h * dens / (1.0 + std::exp(-t));
  }
  SimulationConfig cfg;
  cfg.population_size = 1000000;
  double total = 0.0;
  const int reps = 4;
  for (int r = 0; r < reps; ++r) {
    cfg.seed = derive_seed(77, r);
    total += static_cast<double>(simulate_population(cfg).experimental_rows.size());
  }
  const double mean_n = total / reps;
  const double mc_sd = std::sqrt(1e6 * expected) / std::sqrt(static_cast<double>(reps));
  CHECK(std::abs(mean_n - 1e6 * expected) <= 4.0 * mc_sd);
  CHECK(std::abs(1e6 * expected - 1386.0) <= 10.0);
}

TEST_CASE("true inverse-score weights normalize 1/pi") {
  SimulationConfig cfg;
  cfg.population_size = 20000;
  cfg.alpha0 = -3.0;
  cfg.seed = 3;
  const auto draw = simulate_population(cfg);
  const auto w = true_inverse_score_weights(draw);
  CHECK(w.values().sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w.values().minCoeff() > 0.0);
  double total = 0.0;
  for (Index r : draw.experimental_rows) total += 1.0 / draw.selection_score(r);
  CHECK(w[0] == doctest::Approx(1.0 / draw.selection_score(draw.experimental_rows[0]) / total));
}

TEST_CASE("derive_seed separates streams") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(9, 4) == derive_seed(9, 4));
}

TEST_CASE("write_draw output is byte-identical for a fixed seed") {
  SimulationConfig cfg;
  cfg.setting = Setting::II;
  cfg.population_size = 3000;
  cfg.rwd_size = 50;
  cfg.alpha0 = -3.0;
  cfg.seed = 7;
  ScratchDir a("draw"), b("draw");
  write_draw(simulate_population(cfg), a.path());
  write_draw(simulate_population(cfg), b.path());
  for (const auto& entry : std::filesystem::directory_iterator(a.path())) {
    CHECK(slurp(entry.path()) == slurp(b.path() / entry.path().filename()));
  }
}
