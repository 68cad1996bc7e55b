#include "doctest.h"

#include "itr/serialize.hpp"

#include "scratch_dir.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using itr::testing::ScratchDir;

namespace {

int run(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = std::string("\"") + ITR_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("cli: usage errors exit with code 2") {
  ScratchDir dir("cli");
  const auto log = dir / "log.txt";
  CHECK(run("weights --method mle --experimental x.csv --target y.csv --out w.csv", log) == 2);
  CHECK(run("simulate --out " + (dir / "s").string() + " --no-such-flag", log) == 2);
  CHECK(run("frobnicate", log) == 2);
}

TEST_CASE("cli: simulate is deterministic") {
  ScratchDir dir("cli");
  const auto log = dir / "log.txt";
  const std::string common = " --setting II --N 5000 --m 200 --alpha0 -3 --seed 7";
  REQUIRE(run("simulate --out " + (dir / "a").string() + common, log) == 0);
  REQUIRE(run("simulate --out " + (dir / "b").string() + common, log) == 0);
  for (const char* f : {"population.csv", "experimental.csv", "target.csv"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
}

TEST_CASE("cli: fit then evaluate reproduces the in-sample value") {
  ScratchDir dir("cli");
  const auto log = dir / "log.txt";
  const auto sim = dir / "sim";
  REQUIRE(run("simulate --out " + sim.string() + " --setting III --N 20000 --m 300 --alpha0 -3 --seed 3", log) == 0);
  const std::string data =
      " --experimental " + (sim / "experimental.csv").string() + " --target " + (sim / "target.csv").string();
  const auto rule = dir / "rule.json";
  REQUIRE(run("fit" + data + " --method np --starts 3 --out " + rule.string(), log) == 0);
  const auto value = dir / "value.json";
  REQUIRE(run("evaluate" + data + " --method np --rule " + rule.string() + " --population " +
                  (sim / "population.csv").string() + " --out " + value.string(),
              log) == 0);
  const auto r = itr::io::read_json(rule);
  const auto v = itr::io::read_json(value);
  CHECK(std::abs(r["metadata"]["value"].get<double>() - v["value"].get<double>()) <= 1e-10);
  CHECK(v["value_mse"].get<double>() >= 0.0);
}

TEST_CASE("cli: malformed input is a schema error") {
  ScratchDir dir("cli");
  {
    std::ofstream f(dir / "bad.csv");
    f << "x1,A,Y\n1,2,3\n0,0,1\n";
  }
  CHECK(run("weights --method uniform --experimental " + (dir / "bad.csv").string() + " --out " +
                (dir / "w.csv").string(),
            dir / "log.txt") == 3);
}
