#include "itr/bench.hpp"

#include "itr/csv.hpp"
#include "itr/error.hpp"
#include "itr/evaluation.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace itr {

std::string to_string(BenchMethod method) {
  switch (method) {
    case BenchMethod::w1: return "w1";
    case BenchMethod::w2: return "w2";
    case BenchMethod::cv: return "cv";
    case BenchMethod::np: return "np";
    case BenchMethod::unweight: return "unweight";
    case BenchMethod::bm: return "bm";
  }
  return "unknown";
}

BenchMethod bench_method_from_string(const std::string& name) {
  for (BenchMethod m : {BenchMethod::w1, BenchMethod::w2, BenchMethod::cv, BenchMethod::np, BenchMethod::unweight,
                        BenchMethod::bm}) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorKind::usage, "unknown-method", "unknown benchmark method '" + name + "'");
}

std::string to_string(SamplingSpec spec) { return spec == SamplingSpec::correct ? "correct" : "misspecified"; }

SamplingSpec sampling_spec_from_string(const std::string& name) {
  if (name == "correct") return SamplingSpec::correct;
  if (name == "misspecified") return SamplingSpec::misspecified;
  throw Error(ErrorKind::usage, "unknown-spec", "unknown sampling specification '" + name + "'");
}

std::string to_string(BenchScale scale) { return scale == BenchScale::desk ? "desk" : "paper"; }

BenchScale bench_scale_from_string(const std::string& name) {
  if (name == "desk") return BenchScale::desk;
  if (name == "paper") return BenchScale::paper;
  throw Error(ErrorKind::usage, "unknown-scale", "unknown scale '" + name + "'");
}

TrainOptions BenchConfig::default_train_options() {
  TrainOptions t;
  t.learn.nuisance.propensity = PropensityMode::constant;
  t.learn.nuisance.weighted_propensity = false;
  return t;
}

void BenchConfig::apply_scale(BenchScale scale) {
  if (scale == BenchScale::desk) {
    population_size = 100000;
    rwd_size = 1000;
    replicates = 50;
  } else {
    population_size = 1000000;
    rwd_size = 5000;
    replicates = 200;
  }
}

void BenchConfig::validate() const {
  if (settings.empty()) throw Error(ErrorKind::usage, "empty-settings", "no settings selected");
  if (methods.empty()) throw Error(ErrorKind::usage, "empty-methods", "no methods selected");
  if (specs.empty()) throw Error(ErrorKind::usage, "empty-specs", "no sampling specifications selected");
  if (replicates < 1) throw Error(ErrorKind::usage, "invalid-replicates", "replicates must be >= 1");
  if (cv_splits < 1) throw Error(ErrorKind::usage, "invalid-splits", "cv splits must be >= 1");
  SimulationConfig sim;
  sim.population_size = population_size;
  sim.rwd_size = rwd_size;
  sim.validate();
}

namespace {

bool spec_dependent(BenchMethod m) { return m == BenchMethod::w1 || m == BenchMethod::w2 || m == BenchMethod::cv; }

std::size_t index_of(Setting s) { return static_cast<std::size_t>(s); }

// Fits one method on one draw; returns the learned rule and the ESS of the weights used.
std::pair<LinearRule, double> fit_method(BenchMethod method, SamplingSpec spec, const PopulationDraw& draw,
                                         const ExperimentalSample& exp, const TargetSample& rwd,
                                         const BenchConfig& config, std::uint64_t seed) {
  TrainOptions train = config.train;
  train.learn.policy.seed = seed;
  train.parametric.features = spec == SamplingSpec::correct ? ScoreFeatures::linear : ScoreFeatures::squared;
  const double n_pop = static_cast<double>(draw.population_size());
  switch (method) {
    case BenchMethod::w1:
    case BenchMethod::w2:
    case BenchMethod::np:
    case BenchMethod::unweight: {
      const CandidateKind kind = method == BenchMethod::w1   ? CandidateKind::mle
                                 : method == BenchMethod::w2 ? CandidateKind::ee
                                 : method == BenchMethod::np ? CandidateKind::nonparametric
                                                             : CandidateKind::unweighted;
      const TrainedMethod t = train_method(kind, exp, rwd, n_pop, train);
      return {t.learned.rule, effective_sample_size(t.weights)};
    }
    case BenchMethod::cv: {
      const SelectionReport r = cross_validate(exp, rwd, MethodCatalog::standard(true), config.cv_splits,
                                               derive_seed(seed, 11), n_pop, train);
      return {r.rule, std::numeric_limits<double>::quiet_NaN()};
    }
    case BenchMethod::bm: {
      const TransferWeights w = true_inverse_score_weights(draw);
      ContrastEstimates tau;
      tau.tau = draw.contrast(draw.experimental_rows);
      tau.estimator = ContrastEstimator::truth;
      tau.weighted = true;
      const MultiStartReport fit = fit_rule_multistart(exp, w, tau, train.learn.policy);
      return {fit.best.rule, effective_sample_size(w)};
    }
  }
  throw Error(ErrorKind::invalid_argument, "unknown-method", "unknown benchmark method");
}

}  // namespace

BenchResults run_benchmark(const BenchConfig& config) {
  config.validate();
  const std::size_t ns = config.settings.size(), nm = config.methods.size(), nsp = config.specs.size();
  const auto reps = static_cast<std::size_t>(config.replicates);
  // slot(setting, method, spec, replicate) in output order
  std::vector<BenchRecord> records(ns * nm * nsp * reps);
  const auto slot = [&](std::size_t s, std::size_t m, std::size_t sp, std::size_t r) {
    return ((s * nm + m) * nsp + sp) * reps + r;
  };

  const int tasks = static_cast<int>(ns * reps);
#pragma omp parallel for schedule(dynamic)
  for (int task = 0; task < tasks; ++task) {
    const std::size_t s = static_cast<std::size_t>(task) / reps, r = static_cast<std::size_t>(task) % reps;
    const Setting setting = config.settings[s];
    const std::uint64_t rep_seed = derive_seed(derive_seed(config.seed, 100 + index_of(setting)), r);
    for (std::size_t m = 0; m < nm; ++m) {
      for (std::size_t sp = 0; sp < nsp; ++sp) {
        BenchRecord& rec = records[slot(s, m, sp, r)];
        rec.setting = setting;
        rec.method = config.methods[m];
        rec.spec = config.specs[sp];
        rec.replicate = static_cast<int>(r);
        rec.ess = std::numeric_limits<double>::quiet_NaN();
      }
    }
    std::optional<PopulationDraw> draw;
    try {
      SimulationConfig sim;
      sim.setting = setting;
      sim.population_size = config.population_size;
      sim.rwd_size = config.rwd_size;
      sim.seed = rep_seed;
      draw.emplace(simulate_population(sim));
    } catch (const std::exception& e) {
      for (std::size_t m = 0; m < nm; ++m) {
        for (std::size_t sp = 0; sp < nsp; ++sp) records[slot(s, m, sp, r)].error = e.what();
      }
      continue;
    }
    const ExperimentalSample exp = draw->experimental();
    const TargetSample rwd = draw->target();
    for (std::size_t m = 0; m < nm; ++m) {
      const BenchMethod method = config.methods[m];
      for (std::size_t sp = 0; sp < nsp; ++sp) {
        BenchRecord& rec = records[slot(s, m, sp, r)];
        rec.n = exp.size();
        if (!spec_dependent(method) && sp > 0) {
          const BenchRecord& first = records[slot(s, m, 0, r)];
          rec.ok = first.ok;
          rec.value_mse = first.value_mse;
          rec.value = first.value;
          rec.ess = first.ess;
          rec.eta = first.eta;
          rec.error = first.error;
          continue;
        }
        try {
          const auto [rule, ess] = fit_method(method, config.specs[sp], *draw, exp, rwd, config,
                                              derive_seed(rep_seed, 1 + m));
          rec.value_mse = value_mse(rule, *draw);
          rec.value = population_value(rule, *draw);
          rec.ess = ess;
          rec.eta = rule.eta();
          rec.ok = std::isfinite(rec.value_mse) && rec.value_mse >= 0.0;
          if (!rec.ok) rec.error = "non-finite value MSE";
        } catch (const std::exception& e) {
          rec.error = e.what();
        }
      }
    }
  }
  return {config, std::move(records)};
}

namespace {

double quantile(std::vector<double> sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<BenchCell> summarize(const BenchResults& results) {
  std::vector<BenchCell> cells;
  const auto& cfg = results.config;
  for (Setting s : cfg.settings) {
    for (BenchMethod m : cfg.methods) {
      for (SamplingSpec sp : cfg.specs) {
        BenchCell cell;
        cell.setting = s;
        cell.method = m;
        cell.spec = sp;
        std::vector<double> v;
        for (const auto& rec : results.records) {
          if (rec.setting != s || rec.method != m || rec.spec != sp) continue;
          ++cell.records;
          if (rec.ok) {
            v.push_back(rec.value_mse);
          } else {
            ++cell.failures;
          }
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        if (v.empty()) {
          cell.mean = cell.sd = cell.se = cell.min = cell.q25 = cell.median = cell.q75 = cell.max = nan;
        } else {
          double sum = 0.0;
          for (double x : v) sum += x;
          cell.mean = sum / static_cast<double>(v.size());
          double ss = 0.0;
          for (double x : v) ss += (x - cell.mean) * (x - cell.mean);
          cell.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
          cell.se = cell.sd / std::sqrt(static_cast<double>(v.size()));
          std::sort(v.begin(), v.end());
          cell.min = v.front();
          cell.max = v.back();
          cell.q25 = quantile(v, 0.25);
          cell.median = quantile(v, 0.5);
          cell.q75 = quantile(v, 0.75);
        }
        cells.push_back(cell);
      }
    }
  }
  return cells;
}

const BenchCell& find_cell(const std::vector<BenchCell>& cells, Setting setting, BenchMethod method,
                           SamplingSpec spec) {
  for (const auto& c : cells) {
    if (c.setting == setting && c.method == method && c.spec == spec) return c;
  }
  throw Error(ErrorKind::invalid_argument, "missing-cell",
              "no cell for " + to_string(setting) + "/" + to_string(method) + "/" + to_string(spec));
}

void validate_results(const std::vector<BenchCell>& cells) {
  for (const auto& c : cells) {
    if (c.records > 0 && 5 * c.failures > c.records) {
      throw Error(ErrorKind::convergence, "cell-failure",
                  "cell " + to_string(c.setting) + "/" + to_string(c.method) + "/" + to_string(c.spec) + " failed " +
                      std::to_string(c.failures) + " of " + std::to_string(c.records) + " replicates");
    }
  }
}

void emit_report(const BenchResults& results, const std::filesystem::path& dir) {
  if (results.records.empty()) {
    throw Error(ErrorKind::invalid_argument, "empty-results", "no benchmark records to report");
  }
  const auto cells = summarize(results);
  {
    auto out = csv::open_for_write(dir / "raw.csv");
    out << "setting,method,spec,replicate,ok,n,value_mse,value,ess,error\n";
    for (const auto& r : results.records) {
      std::string error = r.error;
      std::replace(error.begin(), error.end(), '"', '\'');
      out << to_string(r.setting) << ',' << to_string(r.method) << ',' << to_string(r.spec) << ',' << r.replicate
          << ',' << (r.ok ? 1 : 0) << ',' << r.n << ',' << (r.ok ? csv::format(r.value_mse) : "") << ','
          << (r.ok ? csv::format(r.value) : "") << ',' << (std::isfinite(r.ess) ? csv::format(r.ess) : "") << ",\""
          << error << "\"\n";
    }
  }
  {
    auto out = csv::open_for_write(dir / "long.csv");
    out << "setting,spec,method,replicate,value_mse\n";
    for (const auto& r : results.records) {
      if (!r.ok) continue;
      out << to_string(r.setting) << ',' << to_string(r.spec) << ',' << to_string(r.method) << ',' << r.replicate
          << ',' << csv::format(r.value_mse) << '\n';
    }
  }
  {
    const auto& cfg = results.config;
    nlohmann::ordered_json j;
    j["population_size"] = cfg.population_size;
    j["rwd_size"] = cfg.rwd_size;
    j["replicates"] = cfg.replicates;
    j["seed"] = cfg.seed;
    j["cv_splits"] = cfg.cv_splits;
    auto& settings = j["settings"] = nlohmann::ordered_json::array();
    for (Setting s : cfg.settings) settings.push_back(to_string(s));
    auto& methods = j["methods"] = nlohmann::ordered_json::array();
    for (BenchMethod m : cfg.methods) methods.push_back(to_string(m));
    auto& specs = j["specs"] = nlohmann::ordered_json::array();
    for (SamplingSpec s : cfg.specs) specs.push_back(to_string(s));
    auto& arr = j["cells"] = nlohmann::ordered_json::array();
    for (const auto& c : cells) {
      nlohmann::ordered_json e;
      e["setting"] = to_string(c.setting);
      e["method"] = to_string(c.method);
      e["spec"] = to_string(c.spec);
      e["records"] = c.records;
      e["failures"] = c.failures;
      e["mean_value_mse"] = c.mean;
      e["sd"] = c.sd;
      e["se"] = c.se;
      e["min"] = c.min;
      e["q25"] = c.q25;
      e["median"] = c.median;
      e["q75"] = c.q75;
      e["max"] = c.max;
      arr.push_back(std::move(e));
    }
    auto out = csv::open_for_write(dir / "summary.json");
    out << j.dump(2) << '\n';
  }
}

}  // namespace itr
