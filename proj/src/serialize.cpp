#include "itr/serialize.hpp"

#include "itr/csv.hpp"
#include "itr/error.hpp"

#include <cmath>
#include <fstream>

namespace itr::io {

namespace {

Json vector_json(const VectorXd& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

VectorXd vector_from(const Json& a, const char* what) {
  if (!a.is_array()) throw Error(ErrorKind::schema, "bad-json", std::string(what) + " must be an array");
  VectorXd v(static_cast<Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw Error(ErrorKind::schema, "bad-json", std::string(what) + " must hold numbers");
    v[static_cast<Index>(i)] = a[i].get<double>();
  }
  return v;
}

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

}  // namespace

Json rule_to_json(const LinearRule& rule, const Json& metadata) {
  Json j;
  j["eta"] = vector_json(rule.canonical().eta());
  j["canonicalized"] = true;
  j["metadata"] = metadata;
  return j;
}

LinearRule rule_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("eta")) {
    throw Error(ErrorKind::schema, "bad-rule", "rule JSON needs an \"eta\" array");
  }
  return LinearRule(vector_from(j["eta"], "eta"));
}

Json nuisance_to_json(const NuisanceFit& fit) {
  Json j;
  j["basis"] = "(1, x, a, a*x)";
  j["beta"] = vector_json(fit.outcome.beta);
  Json p;
  p["mode"] = to_string(fit.propensity.mode);
  if (fit.propensity.mode == PropensityMode::constant) {
    p["constant"] = fit.propensity.constant;
  } else {
    p["gamma"] = vector_json(fit.propensity.gamma);
  }
  p["clip_floor"] = kPropensityFloor;
  j["propensity"] = p;
  j["weights_method"] = to_string(fit.weights_method);
  j["clipped"] = fit.clipped;
  return j;
}

NuisanceFit nuisance_from_json(const Json& j) {
  NuisanceFit fit;
  try {
    fit.outcome.beta = vector_from(j.at("beta"), "beta");
    const Json& p = j.at("propensity");
    fit.propensity.mode = propensity_mode_from_string(p.at("mode").get<std::string>());
    if (fit.propensity.mode == PropensityMode::constant) {
      fit.propensity.constant = p.at("constant").get<double>();
    } else {
      fit.propensity.gamma = vector_from(p.at("gamma"), "gamma");
    }
    fit.weights_method = weight_method_from_string(j.at("weights_method").get<std::string>());
    fit.clipped = j.value("clipped", 0);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::schema, "bad-json", std::string("nuisance JSON: ") + e.what());
  }
  return fit;
}

Json dc_report_to_json(const DcFitReport& report) {
  Json j;
  j["eta"] = vector_json(report.rule.eta());
  j["eta_raw"] = vector_json(report.eta_raw);
  j["objective"] = report.objective;
  j["objective_trace"] = report.objective_trace;
  j["inner_iterations"] = report.inner_iterations;
  Json failures = Json::array();
  for (const auto& f : report.inner_failures) failures.push_back({{"outer_iteration", f.outer_iteration}, {"status", f.status}});
  j["inner_failures"] = failures;
  j["converged"] = report.converged;
  j["degenerate"] = report.degenerate;
  j["xi_change"] = report.xi_change;
  j["risk_scale"] = report.scale;
  j["risk_scale_note"] = report.scale == 1.0 ? "sum-to-one weights: 1/n factor dropped" : "1/n";
  return j;
}

void write_trace_csv(const DcFitReport& report, const std::filesystem::path& path) {
  auto out = csv::open_for_write(path);
  out << "iteration,objective,inner_iterations\n";
  for (std::size_t t = 0; t < report.objective_trace.size(); ++t) {
    out << t + 1 << ',' << csv::format(report.objective_trace[t]) << ',' << report.inner_iterations[t] << '\n';
  }
}

void write_weights_csv(const TransferWeights& w, const std::filesystem::path& path) {
  auto out = csv::open_for_write(path);
  out << "row_id,weight,method\n";
  const std::string method = to_string(w.method());
  for (Index i = 0; i < w.size(); ++i) out << i + 1 << ',' << csv::format(w[i]) << ',' << method << '\n';
}

TransferWeights read_weights_csv(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const auto wc = t.column("weight");
  if (!wc) throw Error(ErrorKind::schema, "missing-column", path.string() + ": no \"weight\" column");
  const auto mc = t.column("method");
  VectorXd w(static_cast<Index>(t.rows.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto v = csv::to_number(t.rows[i][*wc]);
    if (!v) {
      throw Error(ErrorKind::schema, "non-numeric-cell",
                  path.string() + ": weight on row " + std::to_string(i + 1) + " is not numeric");
    }
    w[static_cast<Index>(i)] = *v;
  }
  const WeightMethod method =
      mc && !t.rows.empty() ? weight_method_from_string(t.rows.front()[*mc]) : WeightMethod::uniform;
  if (std::abs(w.sum() - 1.0) <= 1e-10) return TransferWeights(w, WeightScale::sum_to_one, method);
  return TransferWeights::normalized(w, method);
}

Json balance_to_json(const EntropyBalanceFit& fit) {
  Json j;
  Json rows = Json::array();
  for (const auto& r : fit.balance) {
    rows.push_back({{"feature", r.feature},
                    {"weighted_mean", r.weighted_mean},
                    {"target", r.target},
                    {"imbalance", r.imbalance},
                    {"violation", r.violation},
                    {"tolerance", r.tolerance}});
  }
  j["balance"] = rows;
  j["entropy"] = fit.entropy;
  j["duality_gap"] = fit.duality_gap;
  j["iterations"] = fit.iterations;
  j["effective_sample_size"] = effective_sample_size(fit.weights);
  j["notices"] = fit.notices;
  return j;
}

void write_balance_csv(const EntropyBalanceFit& fit, const std::filesystem::path& path) {
  auto out = csv::open_for_write(path);
  out << "feature,weighted_mean,target,violation,tolerance\n";
  for (const auto& r : fit.balance) {
    out << r.feature << ',' << csv::format(r.weighted_mean) << ',' << csv::format(r.target) << ','
        << csv::format(r.violation) << ',' << csv::format(r.tolerance) << '\n';
  }
}

Json selection_to_json(const SelectionReport& report) {
  Json j;
  j["winner"] = report.winner_name;
  j["methods"] = report.methods;
  Json means = Json::object();
  for (std::size_t k = 0; k < report.methods.size(); ++k) means[report.methods[k]] = number_or_null(report.means[k]);
  j["mean_values"] = means;
  Json dq = Json::array();
  for (std::size_t k = 0; k < report.methods.size(); ++k) {
    if (report.disqualified[k]) dq.push_back(report.methods[k]);
  }
  j["disqualified"] = dq;
  Json matrix = Json::array();
  for (const auto& row : report.values) {
    Json r = Json::array();
    for (double v : row) r.push_back(number_or_null(v));
    matrix.push_back(r);
  }
  j["values"] = matrix;
  j["splits"] = report.splits;
  j["seed"] = report.seed;
  j["split_seeds"] = report.split_seeds;
  j["diagnostics"] = report.diagnostics;
  j["rule"] = rule_to_json(report.rule, {{"method", report.winner_name}});
  return j;
}

void write_selection_csv(const SelectionReport& report, const std::filesystem::path& path) {
  auto out = csv::open_for_write(path);
  out << "split";
  for (const auto& m : report.methods) out << ',' << m;
  out << '\n';
  for (std::size_t b = 0; b < report.values.size(); ++b) {
    out << b + 1;
    for (double v : report.values[b]) out << ',' << (std::isnan(v) ? "" : csv::format(v));
    out << '\n';
  }
}

Json probe_to_json(const ProbeResult& probe) {
  Json j;
  Json summary = Json::array();
  for (const auto& s : probe.summary) {
    summary.push_back({{"setting", to_string(s.setting)},
                       {"N", s.population_size},
                       {"replicates_ok", s.ok},
                       {"mean_gap", number_or_null(s.mean_gap)},
                       {"se_gap", number_or_null(s.se_gap)}});
  }
  j["summary"] = summary;
  Json rows = Json::array();
  for (const auto& r : probe.rows) {
    rows.push_back({{"setting", to_string(r.setting)},
                    {"N", r.population_size},
                    {"replicate", r.replicate},
                    {"n", r.n},
                    {"ok", r.ok},
                    {"risk", r.risk},
                    {"oracle_risk", r.oracle_risk},
                    {"gap", r.gap},
                    {"error", r.error}});
  }
  j["rows"] = rows;
  return j;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "io", path.string() + ": cannot open");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::schema, "bad-json", path.string() + ": " + e.what());
  }
}

void write_json(const Json& j, const std::filesystem::path& path) {
  auto out = csv::open_for_write(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::io, "io", path.string() + ": write failed");
}

}  // namespace itr::io
