#include "itr/data.hpp"

#include "itr/csv.hpp"
#include "itr/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace itr {

namespace {

std::vector<std::string> default_names(Index p) {
  std::vector<std::string> names;
  for (Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

void require_finite(const MatrixXd& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorKind::schema, "missing-value", std::string(what) + " contains non-finite values");
  }
}

double logistic(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

}  // namespace

// ---------------------------------------------------------------------------

ExperimentalSample::ExperimentalSample(MatrixXd covariates, VectorXd treatment, VectorXd outcome,
                                       std::vector<std::string> names)
    : covariates_(std::move(covariates)),
      treatment_(std::move(treatment)),
      outcome_(std::move(outcome)),
      names_(std::move(names)) {
  const Index n = covariates_.rows();
  if (n < 2) throw Error(ErrorKind::schema, "too-few-rows", "experimental sample needs n >= 2");
  if (treatment_.size() != n || outcome_.size() != n) {
    throw Error(ErrorKind::schema, "length-mismatch", "covariates, treatment and outcome row counts differ");
  }
  require_finite(covariates_, "covariates");
  require_finite(outcome_, "outcome");
  bool has0 = false, has1 = false;
  for (Index i = 0; i < n; ++i) {
    if (treatment_[i] == 0.0) {
      has0 = true;
    } else if (treatment_[i] == 1.0) {
      has1 = true;
    } else {
      throw Error(ErrorKind::schema, "non-binary-treatment",
                  "treatment value at row " + std::to_string(i + 1) + " is not 0 or 1");
    }
  }
  if (!has0 || !has1) {
    throw Error(ErrorKind::schema, "single-arm", "treatment must contain both 0 and 1");
  }
  if (names_.empty()) names_ = default_names(covariates_.cols());
  if (static_cast<Index>(names_.size()) != covariates_.cols()) {
    throw Error(ErrorKind::schema, "length-mismatch", "covariate name count differs from column count");
  }
}

ExperimentalSample ExperimentalSample::subset(std::span<const Index> rows) const {
  const auto idx = std::vector<Index>(rows.begin(), rows.end());
  return ExperimentalSample(covariates_(idx, Eigen::all), treatment_(idx), outcome_(idx),
                            names_);
}

TargetSample::TargetSample(MatrixXd covariates, std::vector<std::string> names)
    : covariates_(std::move(covariates)), names_(std::move(names)) {
  if (covariates_.rows() < 2) throw Error(ErrorKind::schema, "too-few-rows", "target sample needs m >= 2");
  require_finite(covariates_, "target covariates");
  if (names_.empty()) names_ = default_names(covariates_.cols());
  if (static_cast<Index>(names_.size()) != covariates_.cols()) {
    throw Error(ErrorKind::schema, "length-mismatch", "covariate name count differs from column count");
  }
}

TargetSample TargetSample::subset(std::span<const Index> rows) const {
  const auto idx = std::vector<Index>(rows.begin(), rows.end());
  return TargetSample(covariates_(idx, Eigen::all), names_);
}

// ---------------------------------------------------------------------------

LinearRule::LinearRule(VectorXd eta) : eta_(std::move(eta)) {
  if (eta_.size() < 1) throw Error(ErrorKind::invalid_argument, "empty-rule", "rule needs an intercept");
  if (!eta_.allFinite()) throw Error(ErrorKind::invalid_argument, "non-finite-rule", "rule has non-finite entries");
}

double LinearRule::score(const Eigen::Ref<const VectorXd>& x) const {
  if (x.size() != dim()) {
    throw Error(ErrorKind::invalid_argument, "dimension-mismatch",
                "rule has " + std::to_string(dim()) + " slopes, covariate vector has " +
                    std::to_string(x.size()));
  }
  return eta_[0] + eta_.tail(dim()).dot(x);
}

LinearRule LinearRule::canonical() const {
  const double scale = eta_.cwiseAbs().maxCoeff();
  if (scale == 0.0) return *this;
  return LinearRule(eta_ / scale);
}

bool same_halfspace(const LinearRule& a, const LinearRule& b, double tol) {
  if (a.eta().size() != b.eta().size()) return false;
  const auto ca = a.canonical().eta();
  const auto cb = b.canonical().eta();
  return (ca - cb).cwiseAbs().maxCoeff() <= tol;
}

std::string to_string(WeightMethod method) {
  switch (method) {
    case WeightMethod::mle: return "mle";
    case WeightMethod::ee: return "ee";
    case WeightMethod::nonparametric: return "nonparametric";
    case WeightMethod::uniform: return "uniform";
    case WeightMethod::truth: return "true";
  }
  return "unknown";
}

WeightMethod weight_method_from_string(const std::string& name) {
  if (name == "mle") return WeightMethod::mle;
  if (name == "ee") return WeightMethod::ee;
  if (name == "nonparametric" || name == "np") return WeightMethod::nonparametric;
  if (name == "uniform" || name == "unweighted") return WeightMethod::uniform;
  if (name == "true") return WeightMethod::truth;
  throw Error(ErrorKind::usage, "unknown-method", "unknown weight method '" + name + "'");
}

TransferWeights::TransferWeights(VectorXd values, WeightScale scale, WeightMethod method, int clipped)
    : values_(std::move(values)), scale_(scale), method_(method), clipped_(clipped) {
  if (values_.size() == 0) throw Error(ErrorKind::invalid_argument, "empty-weights", "no weights");
  if (!values_.allFinite() || values_.minCoeff() < 0.0) {
    throw Error(ErrorKind::invalid_argument, "invalid-weights", "weights must be finite and nonnegative");
  }
  if (scale_ == WeightScale::sum_to_one && std::abs(values_.sum() - 1.0) > 1e-10) {
    throw Error(ErrorKind::invalid_argument, "invalid-weights", "sum-to-one weights do not sum to one");
  }
}

TransferWeights TransferWeights::normalized(const VectorXd& raw, WeightMethod method, int clipped) {
  const double total = raw.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw Error(ErrorKind::invalid_argument, "invalid-weights", "weights cannot be normalized");
  }
  VectorXd w = raw / total;
  // Renormalize once more so the sum is 1 to rounding.
  w /= w.sum();
  return TransferWeights(std::move(w), WeightScale::sum_to_one, method, clipped);
}

TransferWeights TransferWeights::uniform(Index n) {
  return TransferWeights(VectorXd::Constant(n, 1.0 / static_cast<double>(n)), WeightScale::sum_to_one,
                         WeightMethod::uniform);
}

TransferWeights TransferWeights::subset(std::span<const Index> rows) const {
  VectorXd w(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) w[static_cast<Index>(k)] = values_[rows[k]];
  if (scale_ == WeightScale::sum_to_one) return normalized(w, method_, clipped_);
  return TransferWeights(std::move(w), scale_, method_, clipped_);
}

// ---------------------------------------------------------------------------

ExperimentalSample load_experimental(const std::filesystem::path& path, const ColumnSchema& schema) {
  const csv::Table table = csv::read(path);
  if (table.rows.empty()) throw Error(ErrorKind::schema, "empty-file", path.string() + " has no data rows");

  const auto find = [&](const std::string& name) {
    const auto j = table.column(name);
    if (!j) throw Error(ErrorKind::schema, "missing-column", "column '" + name + "' not found in " + path.string());
    return *j;
  };
  const std::size_t a_col = find(schema.treatment);
  const std::size_t y_col = find(schema.outcome);

  std::vector<std::string> names = schema.covariates;
  if (names.empty()) {
    for (const auto& h : table.header) {
      if (h != schema.treatment && h != schema.outcome) names.push_back(h);
    }
  }
  std::vector<std::size_t> x_cols;
  for (const auto& name : names) x_cols.push_back(find(name));

  const Index n = static_cast<Index>(table.rows.size());
  const Index p = static_cast<Index>(x_cols.size());
  MatrixXd x(n, p);
  VectorXd a(n), y(n);
  const auto cell = [&](Index i, std::size_t j) {
    const std::string& raw = table.rows[static_cast<std::size_t>(i)][j];
    const auto v = csv::to_number(raw);
    if (!v) {
      const bool missing = raw.empty() || raw == "NA" || raw == "NaN" || raw == "nan";
      throw Error(ErrorKind::schema, missing ? "missing-value" : "non-numeric-cell",
                  "row " + std::to_string(i + 1) + ", column '" + table.header[j] + "': '" + raw + "'");
    }
    return *v;
  };
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) x(i, j) = cell(i, x_cols[static_cast<std::size_t>(j)]);
    a[i] = cell(i, a_col);
    if (a[i] != 0.0 && a[i] != 1.0) {
      throw Error(ErrorKind::schema, "non-binary-treatment",
                  "row " + std::to_string(i + 1) + ": treatment '" + table.rows[static_cast<std::size_t>(i)][a_col] +
                      "' is not 0 or 1");
    }
    y[i] = cell(i, y_col);
  }
  return ExperimentalSample(std::move(x), std::move(a), std::move(y), std::move(names));
}

TargetSample load_target(const std::filesystem::path& path, const std::vector<std::string>& covariates) {
  const csv::Table table = csv::read(path);
  if (table.rows.empty()) throw Error(ErrorKind::schema, "empty-file", path.string() + " has no data rows");
  std::vector<std::string> names = covariates.empty() ? table.header : covariates;
  std::vector<std::size_t> cols;
  for (const auto& name : names) {
    const auto j = table.column(name);
    if (!j) throw Error(ErrorKind::schema, "missing-column", "column '" + name + "' not found in " + path.string());
    cols.push_back(*j);
  }
  const Index m = static_cast<Index>(table.rows.size());
  MatrixXd x(m, static_cast<Index>(cols.size()));
  for (Index i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const std::string& raw = table.rows[static_cast<std::size_t>(i)][cols[k]];
      const auto v = csv::to_number(raw);
      if (!v) {
        const bool missing = raw.empty() || raw == "NA" || raw == "NaN" || raw == "nan";
        throw Error(ErrorKind::schema, missing ? "missing-value" : "non-numeric-cell",
                    "row " + std::to_string(i + 1) + ", column '" + names[k] + "': '" + raw + "'");
      }
      x(i, static_cast<Index>(k)) = *v;
    }
  }
  return TargetSample(std::move(x), std::move(names));
}

// ---------------------------------------------------------------------------

std::string to_string(Setting setting) {
  switch (setting) {
    case Setting::I: return "I";
    case Setting::II: return "II";
    case Setting::III: return "III";
  }
  return "?";
}

Setting setting_from_string(const std::string& name) {
  if (name == "I" || name == "1") return Setting::I;
  if (name == "II" || name == "2") return Setting::II;
  if (name == "III" || name == "3") return Setting::III;
  throw Error(ErrorKind::usage, "unknown-setting", "unknown setting '" + name + "'");
}

double true_contrast(Setting setting, double x1, double x2) {
  switch (setting) {
    case Setting::I: return std::atan(std::exp(1.0 + x1) - 3.0 * x2 - 5.0);
    case Setting::II: return std::cos(1.0) + std::cos(x1) + std::cos(x2) - 1.5;
    case Setting::III: return 1.0 + 2.0 * x1 + 3.0 * x2;
  }
  return 0.0;
}

void SimulationConfig::validate() const {
  if (population_size < 1 || rwd_size < 1 || rwd_size > population_size) {
    throw Error(ErrorKind::invalid_argument, "invalid-config", "need N >= m >= 1");
  }
  if (!(noise_sd > 0.0)) throw Error(ErrorKind::invalid_argument, "invalid-config", "noise_sd must be positive");
  if (alpha1.size() != 2 || !alpha1.allFinite() || !std::isfinite(alpha0)) {
    throw Error(ErrorKind::invalid_argument, "invalid-config", "sampling alpha must be finite with two slopes");
  }
}

double PopulationDraw::selection_score(Index row) const {
  return logistic(config.alpha0 + config.alpha1.dot(covariates.row(row).transpose()));
}

ExperimentalSample PopulationDraw::experimental() const {
  const Index n = static_cast<Index>(experimental_rows.size());
  VectorXd y(n);
  for (Index k = 0; k < n; ++k) {
    y[k] = potential_outcomes(experimental_rows[static_cast<std::size_t>(k)], treatment[k] > 0.5 ? 1 : 0);
  }
  return ExperimentalSample(covariates(experimental_rows, Eigen::all), treatment, std::move(y));
}

TargetSample PopulationDraw::target() const {
  return TargetSample(covariates(target_rows, Eigen::all));
}

VectorXd PopulationDraw::experimental_true_contrast() const {
  VectorXd tau(static_cast<Index>(experimental_rows.size()));
  for (std::size_t k = 0; k < experimental_rows.size(); ++k) {
    const Index i = experimental_rows[k];
    tau[static_cast<Index>(k)] = potential_outcomes(i, 1) - potential_outcomes(i, 0);
  }
  return tau;
}

PopulationDraw simulate_population(const SimulationConfig& config) {
  config.validate();
  const Index N = config.population_size;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  PopulationDraw draw;
  draw.config = config;
  draw.covariates.resize(N, 2);
  draw.potential_outcomes.resize(N, 2);
  draw.contrast.resize(N);
  draw.selection.assign(static_cast<std::size_t>(N), 0);

  for (Index i = 0; i < N; ++i) {
    const double x1 = 1.0 + normal(rng);
    const double x2 = 1.0 + normal(rng);
    const double e0 = config.noise_sd * normal(rng);
    const double e1 = config.noise_sd * normal(rng);
    const double tau = true_contrast(config.setting, x1, x2);
    const double base = 1.0 + 2.0 * x1 + 3.0 * x2;
    draw.covariates(i, 0) = x1;
    draw.covariates(i, 1) = x2;
    draw.contrast[i] = tau;
    draw.potential_outcomes(i, 0) = base + e0;
    draw.potential_outcomes(i, 1) = base + tau + e1;
    const double pi = logistic(config.alpha0 + config.alpha1[0] * x1 + config.alpha1[1] * x2);
    if (unif(rng) < pi) {
      draw.selection[static_cast<std::size_t>(i)] = 1;
      draw.experimental_rows.push_back(i);
    }
  }

  // Simple random subsample of size m.
  std::vector<Index> perm(static_cast<std::size_t>(N));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index k = 0; k < config.rwd_size; ++k) {
    std::uniform_int_distribution<Index> pick(k, N - 1);
    std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(pick(rng))]);
  }
  draw.target_rows.assign(perm.begin(), perm.begin() + config.rwd_size);
  std::sort(draw.target_rows.begin(), draw.target_rows.end());

  draw.treatment.resize(static_cast<Index>(draw.experimental_rows.size()));
  for (Index k = 0; k < draw.treatment.size(); ++k) draw.treatment[k] = unif(rng) < 0.5 ? 1.0 : 0.0;

  if (draw.experimental_rows.empty()) {
    throw Error(ErrorKind::invalid_argument, "empty-experiment",
                "no population rows were selected into the experiment (seed " + std::to_string(config.seed) + ")");
  }
  return draw;
}

TransferWeights true_inverse_score_weights(const PopulationDraw& draw) {
  VectorXd raw(static_cast<Index>(draw.experimental_rows.size()));
  for (std::size_t k = 0; k < draw.experimental_rows.size(); ++k) {
    raw[static_cast<Index>(k)] = 1.0 / draw.selection_score(draw.experimental_rows[k]);
  }
  return TransferWeights::normalized(raw, WeightMethod::truth);
}

void write_draw(const PopulationDraw& draw, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "io", dir.string() + ": " + ec.message());

  std::vector<std::uint8_t> in_target(static_cast<std::size_t>(draw.population_size()), 0);
  for (Index i : draw.target_rows) in_target[static_cast<std::size_t>(i)] = 1;

  {
    auto out = csv::open_for_write(dir / "population.csv");
    out << "id,x1,x2,y0,y1,tau,pi_s,s,in_target\n";
    for (Index i = 0; i < draw.population_size(); ++i) {
      out << i << ',' << csv::format(draw.covariates(i, 0)) << ',' << csv::format(draw.covariates(i, 1)) << ','
          << csv::format(draw.potential_outcomes(i, 0)) << ',' << csv::format(draw.potential_outcomes(i, 1)) << ','
          << csv::format(draw.contrast[i]) << ',' << csv::format(draw.selection_score(i)) << ','
          << int(draw.selection[static_cast<std::size_t>(i)]) << ',' << int(in_target[static_cast<std::size_t>(i)])
          << '\n';
    }
  }
  {
    const ExperimentalSample exp = draw.experimental();
    auto out = csv::open_for_write(dir / "experimental.csv");
    out << "x1,x2,A,Y\n";
    for (Index k = 0; k < exp.size(); ++k) {
      out << csv::format(exp.covariates()(k, 0)) << ',' << csv::format(exp.covariates()(k, 1)) << ','
          << int(exp.treatment()[k]) << ',' << csv::format(exp.outcome()[k]) << '\n';
    }
  }
  {
    auto out = csv::open_for_write(dir / "target.csv");
    out << "x1,x2\n";
    for (Index i : draw.target_rows) {
      out << csv::format(draw.covariates(i, 0)) << ',' << csv::format(draw.covariates(i, 1)) << '\n';
    }
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace itr
