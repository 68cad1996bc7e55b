#include "itr/bench.hpp"
#include "itr/csv.hpp"
#include "itr/data.hpp"
#include "itr/error.hpp"
#include "itr/evaluation.hpp"
#include "itr/kernels.hpp"
#include "itr/nuisance.hpp"
#include "itr/policy_dc.hpp"
#include "itr/selection.hpp"
#include "itr/serialize.hpp"
#include "itr/transfer_weights.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace itr;
using io::Json;

namespace {

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  1  internal error\n"
    "  2  usage error (unknown flag, missing option, parametric weights without --N)\n"
    "  3  input schema error (missing column, non-binary treatment, non-numeric cell, empty file)\n"
    "  4  infeasible balance constraints\n"
    "  5  convergence failure (separation, non-convergence, too many failed replicates)\n"
    "  6  I/O failure\n"
    "  7  invalid argument\n";

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::vector<double> parse_numbers(const std::string& s, const char* what) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    const auto v = csv::to_number(item);
    if (!v) throw Error(ErrorKind::usage, "bad-number", std::string(what) + ": '" + item + "' is not a number");
    out.push_back(*v);
  }
  return out;
}

// Reads key = value lines and appends "--key=value" for every key not already given on the command line.
std::vector<std::string> splice_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (!path) return args;
  std::ifstream in(*path);
  if (!in) throw Error(ErrorKind::io, "io", *path + ": cannot open config file");
  const auto given = [&](const std::string& key) {
    for (const auto& a : args) {
      if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) return true;
    }
    return false;
  };
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::usage, "bad-config", *path + ":" + std::to_string(number) + ": expected key = value");
    }
    std::string key = line.substr(b, eq - b);
    std::string value = line.substr(eq + 1);
    key.erase(key.find_last_not_of(" \t") + 1);
    const auto vb = value.find_first_not_of(" \t");
    value = vb == std::string::npos ? "" : value.substr(vb);
    value.erase(value.find_last_not_of(" \t\r") + 1);
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (key.empty() || key == "config") continue;
    if (!given(key)) args.push_back("--" + key + "=" + value);
  }
  return args;
}

struct DataFlags {
  std::string experimental;
  std::string target;
  std::string covariates;
  std::string treatment = "A";
  std::string outcome = "Y";

  void add(CLI::App* app, bool need_target) {
    app->add_option("--experimental", experimental, "Experimental CSV (covariates, treatment, outcome)")->required();
    auto* t = app->add_option("--target", target, "Real-world covariate CSV");
    if (need_target) t->required();
    app->add_option("--covariates", covariates, "Comma-separated covariate columns (default: all others)");
    app->add_option("--treatment", treatment, "Treatment column")->capture_default_str();
    app->add_option("--outcome", outcome, "Outcome column")->capture_default_str();
  }

  ExperimentalSample load_exp() const {
    ColumnSchema schema;
    schema.covariates = split_list(covariates);
    schema.treatment = treatment;
    schema.outcome = outcome;
    return load_experimental(experimental, schema);
  }

  TargetSample load_rwd(const ExperimentalSample& exp) const { return load_target(target, exp.names()); }
};

struct WeightFlags {
  std::string method = "np";
  std::optional<double> population_size;
  std::string features = "linear";
  std::string deltas = "0,0.25,0.5,1";
  double max_imbalance = 0.1;
  int order = 2;
  std::string weights_file;

  void add(CLI::App* app, bool allow_file) {
    app->add_option("--method", method, "Weighting: np | mle | ee | uniform (alias unweighted)")->capture_default_str();
    app->add_option("--N", population_size, "Target population size (required for mle and ee)");
    app->add_option("--features", features, "Sampling-score features: linear | squared")->capture_default_str();
    app->add_option("--deltas", deltas, "Tolerance grid for nonparametric weights")->capture_default_str();
    app->add_option("--max-imbalance", max_imbalance, "Standardized imbalance bound in tolerance search")
        ->capture_default_str();
    app->add_option("--moment-order", order, "Highest raw moment balanced")->capture_default_str();
    if (allow_file) app->add_option("--weights", weights_file, "Read weights CSV instead of estimating");
  }

  WeightMethod kind() const { return weight_method_from_string(method); }

  void check() const {
    const WeightMethod m = kind();
    if ((m == WeightMethod::mle || m == WeightMethod::ee) && !population_size && weights_file.empty()) {
      throw Error(ErrorKind::usage, "missing-population-size",
                  "--method " + method + " needs the target population size --N");
    }
    if (m == WeightMethod::truth) throw Error(ErrorKind::usage, "bad-method", "true weights need a simulation");
  }

  ToleranceSearch search() const {
    ToleranceSearch s;
    s.deltas = parse_numbers(deltas, "--deltas");
    s.max_standardized_imbalance = max_imbalance;
    s.moment_order = order;
    return s;
  }

  ParametricOptions parametric() const {
    ParametricOptions p;
    if (features == "linear") {
      p.features = ScoreFeatures::linear;
    } else if (features == "squared") {
      p.features = ScoreFeatures::squared;
    } else {
      throw Error(ErrorKind::usage, "bad-features", "--features must be linear or squared");
    }
    return p;
  }
};

struct WeightsResult {
  TransferWeights weights = TransferWeights::uniform(2);
  std::optional<TunedBalanceFit> balance;
  std::optional<SamplingScoreModel> score;
};

WeightsResult compute_weights(const WeightFlags& f, const ExperimentalSample& exp,
                              const std::optional<TargetSample>& rwd) {
  WeightsResult r;
  if (!f.weights_file.empty()) {
    r.weights = io::read_weights_csv(f.weights_file);
    if (r.weights.size() != exp.size()) {
      throw Error(ErrorKind::schema, "length-mismatch", "weights file and experimental sample differ in rows");
    }
    return r;
  }
  const WeightMethod m = f.kind();
  if (m == WeightMethod::uniform) {
    r.weights = TransferWeights::uniform(exp.size());
    return r;
  }
  if (!rwd) throw Error(ErrorKind::usage, "missing-target", "--method " + f.method + " needs --target");
  if (m == WeightMethod::nonparametric) {
    r.balance = fit_weights_nonparametric_tuned(exp, *rwd, f.search());
    r.weights = r.balance->fit.weights;
    return r;
  }
  r.score = m == WeightMethod::mle ? fit_sampling_mle(exp, *rwd, *f.population_size, f.parametric())
                                   : fit_sampling_ee(exp, *rwd, *f.population_size, {}, f.parametric());
  r.weights = weights_from_score(*r.score, exp);
  return r;
}

struct NuisanceFlags {
  std::string propensity = "constant";
  bool unweighted_propensity = false;
  bool verbatim = false;

  void add(CLI::App* app) {
    app->add_option("--propensity", propensity, "Propensity model: constant | logistic")->capture_default_str();
    app->add_flag("--unweighted-propensity", unweighted_propensity, "Fit the propensity without transfer weights");
    app->add_flag("--verbatim-sign", verbatim, "Use the printed minus sign on the Q augmentation term");
  }

  NuisanceOptions options() const {
    NuisanceOptions o;
    o.propensity = propensity_mode_from_string(propensity);
    o.weighted_propensity = !unweighted_propensity;
    return o;
  }

  AugmentationSign sign() const { return verbatim ? AugmentationSign::verbatim : AugmentationSign::standard; }
};

struct PolicyFlags {
  std::string contrast = "aipw";
  int starts = 5;
  bool no_wls_start = false;
  bool anneal = false;
  double zeta1 = 1.0;
  double zeta2 = 1.0;
  std::uint64_t seed = 1;

  void add(CLI::App* app) {
    app->add_option("--contrast", contrast, "Contrast estimator: aipw | regression | ipw")->capture_default_str();
    app->add_option("--starts", starts, "Random starts for the d.c. solver")->capture_default_str();
    app->add_flag("--no-wls-start", no_wls_start, "Skip the weighted least-squares start");
    app->add_flag("--anneal", anneal, "Anneal zeta1 over 1, 2, 4");
    app->add_option("--zeta1", zeta1, "Ramp loss scale")->capture_default_str();
    app->add_option("--zeta2", zeta2, "Ramp loss divisor")->capture_default_str();
    app->add_option("--seed", seed, "Seed for random starts and splits")->capture_default_str();
  }

  LearnOptions learn(const NuisanceOptions& nuisance) const {
    LearnOptions l;
    l.nuisance = nuisance;
    if (contrast == "aipw") {
      l.contrast = ContrastEstimator::aipw;
    } else if (contrast == "regression") {
      l.contrast = ContrastEstimator::regression;
    } else if (contrast == "ipw") {
      l.contrast = ContrastEstimator::ipw;
    } else {
      throw Error(ErrorKind::usage, "bad-contrast", "--contrast must be aipw, regression or ipw");
    }
    if (starts < 0) throw Error(ErrorKind::usage, "bad-starts", "--starts must be >= 0");
    l.policy.random_starts = starts;
    l.policy.wls_start = !no_wls_start;
    l.policy.anneal = anneal;
    l.policy.seed = seed;
    l.policy.dc.ramp = {zeta1, zeta2};
    return l;
  }
};

Json weights_summary(const WeightsResult& r) {
  Json j;
  j["method"] = to_string(r.weights.method());
  j["n"] = r.weights.size();
  j["effective_sample_size"] = effective_sample_size(r.weights);
  j["clipped"] = r.weights.clipped();
  if (r.balance) {
    j["delta"] = r.balance->delta;
    j["duality_gap"] = r.balance->fit.duality_gap;
    j["notices"] = r.balance->fit.notices;
  }
  if (r.score) {
    Json a = Json::array();
    for (Index k = 0; k < r.score->alpha().size(); ++k) a.push_back(r.score->alpha()[k]);
    j["alpha"] = a;
    j["features"] = to_string(r.score->features());
    j["iterations"] = r.score->iterations;
    j["residual_norm"] = r.score->residual_norm;
  }
  return j;
}

// population.csv from `simulate`: covariates x1..xp, y0, y1, tau.
struct Truth {
  MatrixXd covariates;
  MatrixXd potential;
  VectorXd contrast;
};

Truth load_truth(const std::string& path, Index p) {
  const csv::Table t = csv::read(path);
  const auto col = [&](const std::string& name) {
    const auto j = t.column(name);
    if (!j) throw Error(ErrorKind::schema, "missing-column", "column '" + name + "' not found in " + path);
    return *j;
  };
  std::vector<std::size_t> xc;
  for (Index k = 0; k < p; ++k) xc.push_back(col("x" + std::to_string(k + 1)));
  const std::size_t y0 = col("y0"), y1 = col("y1"), tau = col("tau");
  const Index n = static_cast<Index>(t.rows.size());
  Truth truth{MatrixXd(n, p), MatrixXd(n, 2), VectorXd(n)};
  const auto num = [&](Index i, std::size_t j) {
    const auto v = csv::to_number(t.rows[static_cast<std::size_t>(i)][j]);
    if (!v) throw Error(ErrorKind::schema, "non-numeric-cell", path + ": row " + std::to_string(i + 1));
    return *v;
  };
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < p; ++k) truth.covariates(i, k) = num(i, xc[static_cast<std::size_t>(k)]);
    truth.potential(i, 0) = num(i, y0);
    truth.potential(i, 1) = num(i, y1);
    truth.contrast[i] = num(i, tau);
  }
  return truth;
}

void print(const Json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transfer-weighted linear treatment rules: simulate, weight, fit, evaluate, select, benchmark"};
  app.footer(kExitCodes);
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Draw a simulated population, experiment and RWD sample");
  std::string sim_setting = "III", sim_alpha1 = "1,-2", sim_out;
  SimulationConfig sim_cfg;
  sim->add_option("--setting", sim_setting, "Contrast setting: I | II | III")->capture_default_str();
  sim->add_option("--N", sim_cfg.population_size, "Population size")->capture_default_str();
  sim->add_option("--m", sim_cfg.rwd_size, "RWD sample size")->capture_default_str();
  sim->add_option("--alpha0", sim_cfg.alpha0, "Sampling-score intercept")->capture_default_str();
  sim->add_option("--alpha1", sim_alpha1, "Sampling-score slopes")->capture_default_str();
  sim->add_option("--noise-sd", sim_cfg.noise_sd, "Outcome noise standard deviation")->capture_default_str();
  sim->add_option("--seed", sim_cfg.seed, "Seed")->capture_default_str();
  sim->add_option("--out", sim_out, "Output directory")->required();

  // weights
  auto* wts = app.add_subcommand("weights", "Estimate transfer weights");
  DataFlags w_data;
  WeightFlags w_flags;
  std::string w_out, w_balance_json, w_balance_csv;
  w_data.add(wts, false);
  w_flags.add(wts, false);
  wts->add_option("--out", w_out, "Weights CSV (row_id,weight,method)")->required();
  wts->add_option("--balance-json", w_balance_json, "Balance diagnostics JSON (np only)");
  wts->add_option("--balance-csv", w_balance_csv, "Balance diagnostics CSV (np only)");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit nuisances and a linear rule");
  DataFlags f_data;
  WeightFlags f_weights;
  NuisanceFlags f_nuis;
  PolicyFlags f_policy;
  std::string f_out, f_report, f_trace, f_nuisance, f_weights_out;
  f_data.add(fit, false);
  f_weights.add(fit, true);
  f_nuis.add(fit);
  f_policy.add(fit);
  fit->add_option("--out", f_out, "Rule JSON")->required();
  fit->add_option("--report", f_report, "d.c. fit report JSON");
  fit->add_option("--trace", f_trace, "Objective trace CSV");
  fit->add_option("--nuisance", f_nuisance, "Nuisance fit JSON");
  fit->add_option("--weights-out", f_weights_out, "Weights CSV used for the fit");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Estimate the value of a rule");
  DataFlags e_data;
  WeightFlags e_weights;
  NuisanceFlags e_nuis;
  std::string e_rule, e_population, e_out;
  e_data.add(ev, false);
  e_weights.add(ev, true);
  e_nuis.add(ev);
  ev->add_option("--rule", e_rule, "Rule JSON")->required();
  ev->add_option("--population", e_population, "population.csv from simulate, for value MSE");
  ev->add_option("--out", e_out, "Value JSON (also printed)");

  // cv
  auto* cv = app.add_subcommand("cv", "Select a method by multi-split cross-validation");
  DataFlags c_data;
  NuisanceFlags c_nuis;
  PolicyFlags c_policy;
  std::optional<double> c_population;
  std::string c_methods, c_features = "linear", c_out, c_matrix, c_rule;
  int c_splits = 10;
  c_data.add(cv, true);
  c_nuis.add(cv);
  c_policy.add(cv);
  cv->add_option("--N", c_population, "Target population size (adds mle and ee candidates)");
  cv->add_option("--methods", c_methods, "Candidates among np,mle,ee,unweighted (default: all available)");
  cv->add_option("--features", c_features, "Sampling-score features: linear | squared")->capture_default_str();
  cv->add_option("--splits", c_splits, "Number of random splits B")->capture_default_str();
  cv->add_option("--out", c_out, "Selection report JSON")->required();
  cv->add_option("--matrix", c_matrix, "Per-split value matrix CSV");
  cv->add_option("--rule", c_rule, "Rule JSON of the refit winner");

  // bench
  auto* bn = app.add_subcommand("bench", "Monte Carlo comparison of weighting methods");
  std::string b_settings = "I,II,III", b_methods = "w1,w2,cv,np,unweight,bm", b_specs = "correct,misspecified";
  std::string b_scale = "desk", b_out;
  std::optional<int> b_reps;
  std::optional<Index> b_n, b_m;
  std::uint64_t b_seed = 1;
  int b_splits = 10;
  bn->add_option("--settings", b_settings, "Settings")->capture_default_str();
  bn->add_option("--methods", b_methods, "Methods")->capture_default_str();
  bn->add_option("--specs", b_specs, "Sampling-model specifications")->capture_default_str();
  bn->add_option("--scale", b_scale, "desk (N=1e5, m=1000, 50 reps) | paper (N=1e6, m=5000, 200 reps)")
      ->capture_default_str();
  bn->add_option("--replicates", b_reps, "Override replicate count");
  bn->add_option("--N", b_n, "Override population size");
  bn->add_option("--m", b_m, "Override RWD size");
  bn->add_option("--seed", b_seed, "Seed")->capture_default_str();
  bn->add_option("--cv-splits", b_splits, "Splits for the cv method")->capture_default_str();
  bn->add_option("--out", b_out, "Output directory")->required();

  for (auto* sub : {sim, wts, fit, ev, cv, bn}) {
    sub->add_option("--config", "Flat key = value file; command-line flags take precedence");
    sub->footer(kExitCodes);
  }

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = splice_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorKind::usage);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  }

  try {
    if (*sim) {
      sim_cfg.setting = setting_from_string(sim_setting);
      const auto a1 = parse_numbers(sim_alpha1, "--alpha1");
      sim_cfg.alpha1 = Eigen::Map<const VectorXd>(a1.data(), static_cast<Index>(a1.size()));
      const PopulationDraw draw = simulate_population(sim_cfg);
      write_draw(draw, sim_out);
      print({{"setting", to_string(sim_cfg.setting)},
             {"N", draw.population_size()},
             {"n", draw.experimental_rows.size()},
             {"m", draw.target_rows.size()},
             {"seed", sim_cfg.seed},
             {"out", sim_out}});
    } else if (*wts) {
      w_flags.check();
      const ExperimentalSample exp = w_data.load_exp();
      std::optional<TargetSample> rwd;
      if (!w_data.target.empty()) rwd.emplace(w_data.load_rwd(exp));
      const WeightsResult r = compute_weights(w_flags, exp, rwd);
      io::write_weights_csv(r.weights, w_out);
      if (r.balance) {
        if (!w_balance_json.empty()) io::write_json(io::balance_to_json(r.balance->fit), w_balance_json);
        if (!w_balance_csv.empty()) io::write_balance_csv(r.balance->fit, w_balance_csv);
      }
      print(weights_summary(r));
    } else if (*fit) {
      f_weights.check();
      const ExperimentalSample exp = f_data.load_exp();
      std::optional<TargetSample> rwd;
      if (!f_data.target.empty()) rwd.emplace(f_data.load_rwd(exp));
      const WeightsResult w = compute_weights(f_weights, exp, rwd);
      const LearnOptions learn = f_policy.learn(f_nuis.options());
      const LearnedRule learned = learn_rule(exp, w.weights, learn);
      const LinearRule rule = learned.rule.canonical();
      const ValueEstimate v = value_aipw_weighted(rule, exp, w.weights, learned.nuisance, f_nuis.sign());
      Json meta;
      meta["weights_method"] = to_string(w.weights.method());
      meta["covariates"] = exp.names();
      meta["n"] = exp.size();
      if (f_weights.population_size) meta["N"] = *f_weights.population_size;
      meta["propensity"] = f_nuis.propensity;
      meta["weighted_propensity"] = !f_nuis.unweighted_propensity;
      meta["contrast"] = f_policy.contrast;
      meta["augmentation"] = f_nuis.verbatim ? "verbatim" : "standard";
      meta["seed"] = f_policy.seed;
      meta["objective"] = learned.fit.best.objective;
      meta["converged"] = learned.fit.best.converged;
      meta["value"] = v.value;
      meta["effective_sample_size"] = v.ess;
      io::write_json(io::rule_to_json(rule, meta), f_out);
      if (!f_report.empty()) io::write_json(io::dc_report_to_json(learned.fit.best), f_report);
      if (!f_trace.empty()) io::write_trace_csv(learned.fit.best, f_trace);
      if (!f_nuisance.empty()) io::write_json(io::nuisance_to_json(learned.nuisance), f_nuisance);
      if (!f_weights_out.empty()) io::write_weights_csv(w.weights, f_weights_out);
      print(io::rule_to_json(rule, meta));
    } else if (*ev) {
      e_weights.check();
      const LinearRule rule = io::rule_from_json(io::read_json(e_rule));
      const ExperimentalSample exp = e_data.load_exp();
      std::optional<TargetSample> rwd;
      if (!e_data.target.empty()) rwd.emplace(e_data.load_rwd(exp));
      const WeightsResult w = compute_weights(e_weights, exp, rwd);
      const NuisanceFit nuisance = fit_nuisance(exp, w.weights, e_nuis.options());
      const ValueEstimate v = value_aipw_weighted(rule, exp, w.weights, nuisance, e_nuis.sign());
      Json j;
      j["value"] = v.value;
      j["effective_sample_size"] = v.ess;
      j["weights_method"] = to_string(w.weights.method());
      j["augmentation"] = e_nuis.verbatim ? "verbatim" : "standard";
      j["clipped"] = v.clipped;
      if (!e_population.empty()) {
        const Truth truth = load_truth(e_population, exp.dim());
        j["value_mse"] = kernels::value_mse_omp(rule, truth.covariates, truth.potential, truth.contrast);
        j["population_value"] = kernels::population_value_omp(rule, truth.covariates, truth.potential);
      }
      if (!e_out.empty()) io::write_json(j, e_out);
      print(j);
    } else if (*cv) {
      const ExperimentalSample exp = c_data.load_exp();
      const TargetSample rwd = c_data.load_rwd(exp);
      MethodCatalog catalog = MethodCatalog::standard(c_population.has_value());
      if (!c_methods.empty()) {
        catalog.methods.clear();
        for (const auto& name : split_list(c_methods)) catalog.methods.push_back(candidate_kind_from_string(name));
      }
      TrainOptions train;
      train.learn = c_policy.learn(c_nuis.options());
      WeightFlags wf;
      wf.features = c_features;
      train.parametric = wf.parametric();
      const SelectionReport report = cross_validate(exp, rwd, catalog, c_splits, c_policy.seed, c_population, train);
      io::write_json(io::selection_to_json(report), c_out);
      if (!c_matrix.empty()) io::write_selection_csv(report, c_matrix);
      if (!c_rule.empty()) io::write_json(io::rule_to_json(report.rule, {{"method", report.winner_name}}), c_rule);
      Json j;
      j["winner"] = report.winner_name;
      Json means = Json::object();
      for (std::size_t k = 0; k < report.methods.size(); ++k) {
        means[report.methods[k]] = std::isfinite(report.means[k]) ? Json(report.means[k]) : Json(nullptr);
      }
      j["mean_values"] = means;
      j["eta"] = io::rule_to_json(report.rule)["eta"];
      print(j);
    } else if (*bn) {
      BenchConfig cfg;
      cfg.apply_scale(bench_scale_from_string(b_scale));
      cfg.settings.clear();
      for (const auto& s : split_list(b_settings)) cfg.settings.push_back(setting_from_string(s));
      cfg.methods.clear();
      for (const auto& m : split_list(b_methods)) cfg.methods.push_back(bench_method_from_string(m));
      cfg.specs.clear();
      for (const auto& s : split_list(b_specs)) cfg.specs.push_back(sampling_spec_from_string(s));
      if (b_reps) cfg.replicates = *b_reps;
      if (b_n) cfg.population_size = *b_n;
      if (b_m) cfg.rwd_size = *b_m;
      cfg.seed = b_seed;
      cfg.cv_splits = b_splits;
      const BenchResults results = run_benchmark(cfg);
      emit_report(results, b_out);
      const auto cells = summarize(results);
      std::cout << "setting,method,spec,mean_value_mse,se,failures\n";
      for (const auto& c : cells) {
        std::cout << to_string(c.setting) << ',' << to_string(c.method) << ',' << to_string(c.spec) << ','
                  << csv::format(c.mean) << ',' << csv::format(c.se) << ',' << c.failures << '\n';
      }
      validate_results(cells);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
