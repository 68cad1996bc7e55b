#include "doctest.h"

#include "itr/bench.hpp"
#include "itr/error.hpp"

#include "scratch_dir.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

using namespace itr;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

BenchConfig small_config() {
  BenchConfig cfg;
  cfg.settings = {Setting::I, Setting::III};
  cfg.methods = {BenchMethod::np, BenchMethod::unweight};
  cfg.specs = {SamplingSpec::correct};
  cfg.replicates = 3;
  cfg.population_size = 20000;
  cfg.rwd_size = 300;
  cfg.seed = 5;
  cfg.train.learn.policy.random_starts = 3;
  return cfg;
}

}  // namespace

TEST_CASE("configuration errors surface before any work") {
  BenchConfig cfg = small_config();
  cfg.methods.clear();
  CHECK_THROWS_AS(run_benchmark(cfg), Error);
  cfg = small_config();
  cfg.replicates = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  CHECK_THROWS_AS(bench_method_from_string("w3"), Error);
  CHECK(bench_method_from_string("unweight") == BenchMethod::unweight);
  CHECK(sampling_spec_from_string("misspecified") == SamplingSpec::misspecified);
}

TEST_CASE("scales") {
  BenchConfig cfg;
  cfg.apply_scale(BenchScale::paper);
  CHECK(cfg.population_size == 1000000);
  CHECK(cfg.rwd_size == 5000);
  CHECK(cfg.replicates == 200);
  cfg.apply_scale(BenchScale::desk);
  CHECK(cfg.population_size == 100000);
  CHECK(cfg.rwd_size == 1000);
  CHECK(cfg.replicates == 50);
}

TEST_CASE("small benchmark: record layout, summaries and deterministic reports") {
  const BenchConfig cfg = small_config();
  const auto res = run_benchmark(cfg);
  REQUIRE(res.records.size() == 12);
  CHECK(res.records.front().setting == Setting::I);
  CHECK(res.records.front().method == BenchMethod::np);
  CHECK(res.records.back().setting == Setting::III);
  CHECK(res.records.back().replicate == 2);
  for (const auto& r : res.records) {
    if (!r.ok) continue;
    CHECK(r.value_mse >= 0.0);
    CHECK(r.eta.size() == 3);
  }
  const auto cells = summarize(res);
  CHECK(cells.size() == 4);
  const auto& c = find_cell(cells, Setting::III, BenchMethod::unweight, SamplingSpec::correct);
  CHECK(c.records == 3);
  CHECK(c.min <= c.median);
  CHECK(c.median <= c.max);
  CHECK_THROWS_AS(find_cell(cells, Setting::II, BenchMethod::np, SamplingSpec::correct), Error);

  itr::testing::ScratchDir dir("bench");
  emit_report(res, dir / "a");
  emit_report(run_benchmark(cfg), dir / "b");
  for (const char* f : {"raw.csv", "summary.json", "long.csv"}) {
    CHECK(std::filesystem::exists(dir / "a" / f));
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
}

TEST_CASE("validation flags cells with too many failures") {
  BenchCell bad;
  bad.records = 10;
  bad.failures = 3;
  CHECK_THROWS_AS(validate_results({bad}), Error);
  bad.failures = 2;
  CHECK_NOTHROW(validate_results({bad}));
}
