#pragma once

#include "itr/data.hpp"
#include "itr/selection.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace itr {

enum class BenchMethod { w1, w2, cv, np, unweight, bm };
enum class SamplingSpec { correct, misspecified };
enum class BenchScale { desk, paper };

std::string to_string(BenchMethod method);
BenchMethod bench_method_from_string(const std::string& name);
std::string to_string(SamplingSpec spec);
SamplingSpec sampling_spec_from_string(const std::string& name);
std::string to_string(BenchScale scale);
BenchScale bench_scale_from_string(const std::string& name);

struct BenchConfig {
  std::vector<Setting> settings{Setting::I, Setting::II, Setting::III};
  std::vector<BenchMethod> methods{BenchMethod::w1, BenchMethod::w2, BenchMethod::cv,
                                   BenchMethod::np, BenchMethod::unweight, BenchMethod::bm};
  std::vector<SamplingSpec> specs{SamplingSpec::correct, SamplingSpec::misspecified};
  int replicates = 50;
  Index population_size = 100000;
  Index rwd_size = 1000;
  std::uint64_t seed = 1;
  int cv_splits = 10;
  TrainOptions train = default_train_options();

  /// desk: N = 1e5, m = 1000, 50 replicates.  paper: N = 1e6, m = 5000, 200 replicates.
  void apply_scale(BenchScale scale);
  void validate() const;

  static TrainOptions default_train_options();
};

struct BenchRecord {
  Setting setting = Setting::III;
  BenchMethod method = BenchMethod::np;
  SamplingSpec spec = SamplingSpec::correct;
  int replicate = 0;
  bool ok = false;
  double value_mse = 0.0;
  double value = 0.0;  // population value of the learned rule
  double ess = 0.0;    // NaN when not applicable
  Index n = 0;
  VectorXd eta;
  std::string error;
};

struct BenchCell {
  Setting setting = Setting::III;
  BenchMethod method = BenchMethod::np;
  SamplingSpec spec = SamplingSpec::correct;
  int records = 0;
  int failures = 0;
  double mean = 0.0;
  double sd = 0.0;
  double se = 0.0;
  double min = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double max = 0.0;
};

struct BenchResults {
  BenchConfig config;
  std::vector<BenchRecord> records;  // ordered by setting, method, spec, replicate
};

/// Methods that ignore the sampling model are fitted once per draw and reported under every spec.
BenchResults run_benchmark(const BenchConfig& config);

std::vector<BenchCell> summarize(const BenchResults& results);
const BenchCell& find_cell(const std::vector<BenchCell>& cells, Setting setting, BenchMethod method,
                           SamplingSpec spec);

/// Throws when any cell has more than 20% failed replicates.
void validate_results(const std::vector<BenchCell>& cells);

/// raw.csv, summary.json and long.csv under `dir`.
void emit_report(const BenchResults& results, const std::filesystem::path& dir);

}  // namespace itr
