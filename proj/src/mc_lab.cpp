#include "recip/mc_lab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "recip/errors.hpp"
#include "recip/numerics.hpp"
#include "recip/parallel.hpp"
#include "recip/rng.hpp"
#include "text_util.hpp"

namespace recip {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_num(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse,
                "config: key '" + key + "': not a number: '" + value + "'");
  }
}

Eigen::VectorXd parse_vector(const std::string& value, const std::string& key) {
  if (trim(value).empty()) return Eigen::VectorXd(0);
  std::vector<double> parts;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(parse_num(trim(item), key));
  Eigen::VectorXd out(static_cast<Eigen::Index>(parts.size()));
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out(i) = parts[static_cast<std::size_t>(i)];
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n < 2) throw Error(ErrorCode::kInvalid, "config: n must be at least 2");
  if (replicates < 1)
    throw Error(ErrorCode::kInvalid, "config: replicates must be at least 1");
  if (!(level > 0.0 && level < 1.0))
    throw Error(ErrorCode::kInvalid, "config: level must lie in (0,1)");
  if (!(tol > 0.0))
    throw Error(ErrorCode::kInvalid, "config: tol must be positive");
  if (max_iter < 1)
    throw Error(ErrorCode::kInvalid, "config: max_iter must be at least 1");
  spec().validate();
  for (const auto& [ca, cb] : cells) BrSparsitySpec{ca, cb, mu0, tau0}.validate();
  if (model == ModelKind::kBr &&
      gamma1.size() + gamma2.size() + delta.size() > 0)
    throw Error(ErrorCode::kInvalid,
                "config: the br model takes no covariate parameters");
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig config;
  std::map<std::string, std::string> kv;
  std::stringstream in(text);
  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::kParse, "config: line " + std::to_string(lineno) +
                                         ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (kv.count(key))
      throw Error(ErrorCode::kParse, "config: duplicate key '" + key + "'");
    kv[key] = value;
  }

  for (const auto& [key, value] : kv) {
    if (key == "model") {
      if (value == "br") config.model = ModelKind::kBr;
      else if (value == "p15") config.model = ModelKind::kP15;
      else
        throw Error(ErrorCode::kParse,
                    "config: model must be 'br' or 'p15', got '" + value + "'");
    } else if (key == "n") {
      config.n = static_cast<std::int64_t>(parse_num(value, key));
    } else if (key == "a") {
      config.a = parse_num(value, key);
    } else if (key == "b") {
      config.b = parse_num(value, key);
    } else if (key == "mu") {
      config.mu0 = parse_num(value, key);
    } else if (key == "tau") {
      config.tau0 = parse_num(value, key);
    } else if (key == "gamma1") {
      config.gamma1 = parse_vector(value, key);
    } else if (key == "gamma2") {
      config.gamma2 = parse_vector(value, key);
    } else if (key == "delta") {
      config.delta = parse_vector(value, key);
    } else if (key == "replicates") {
      config.replicates = static_cast<int>(parse_num(value, key));
    } else if (key == "covariates") {
      if (value == "redraw") config.covariates = CovariateMode::kRedraw;
      else if (value == "fixed") config.covariates = CovariateMode::kFixed;
      else
        throw Error(ErrorCode::kParse,
                    "config: covariates must be 'redraw' or 'fixed'");
    } else if (key == "covariate_law") {
      if (value == "uniform01") config.law = CovariateLaw::kUniform01;
      else if (value == "uniform_pm1") config.law = CovariateLaw::kUniformPm1;
      else
        throw Error(ErrorCode::kParse,
                    "config: covariate_law must be 'uniform01' or "
                    "'uniform_pm1'");
    } else if (key == "seed") {
      config.seed = static_cast<std::uint64_t>(std::stoull(value));
    } else if (key == "workers") {
      config.workers = static_cast<int>(parse_num(value, key));
    } else if (key == "tol") {
      config.tol = parse_num(value, key);
    } else if (key == "max_iter") {
      config.max_iter = static_cast<int>(parse_num(value, key));
    } else if (key == "level") {
      config.level = parse_num(value, key);
    } else if (key == "cells") {
      std::stringstream ss(value);
      std::string cell;
      while (std::getline(ss, cell, ',')) {
        cell = trim(cell);
        const std::size_t colon = cell.find(':');
        if (colon == std::string::npos)
          throw Error(ErrorCode::kParse,
                      "config: cells entries must look like a:b, got '" + cell +
                          "'");
        config.cells.emplace_back(parse_num(trim(cell.substr(0, colon)), key),
                                  parse_num(trim(cell.substr(colon + 1)), key));
      }
    } else {
      throw Error(ErrorCode::kParse, "config: unknown key '" + key + "'");
    }
  }
  config.validate();
  return config;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

namespace {

struct Replicate {
  enum class Status { kOk, kNonexistent, kNonconverged };
  Status status = Status::kOk;
  Eigen::VectorXd est;  // per coordinate
  Eigen::VectorXd se;
};

struct RunPlan {
  std::vector<std::string> names;   // coordinate names (rho appended last)
  Eigen::VectorXd truth;            // at the n-dependent level
  int theta_dim = 0;                // coordinates excluding the derived rho
};

RunPlan make_plan(const ExperimentConfig& config) {
  RunPlan plan;
  const BrParams level = config.spec().at(config.n);
  if (config.model == ModelKind::kBr) {
    plan.names = {"mu_n", "tau_n", "rho_n"};
    plan.truth.resize(3);
    plan.truth << level.mu_n, level.tau_n, level.rho_n();
    plan.theta_dim = 2;
    return plan;
  }
  const int d1 = static_cast<int>(config.gamma1.size());
  const int d2 = static_cast<int>(config.gamma2.size());
  const int d3 = static_cast<int>(config.delta.size());
  plan.theta_dim = 2 + d1 + d2 + d3;
  plan.names = {"mu_n", "tau_n"};
  for (int k = 0; k < d1; ++k) plan.names.push_back("gamma1:x" + std::to_string(k + 1));
  for (int k = 0; k < d2; ++k) plan.names.push_back("gamma2:y" + std::to_string(k + 1));
  for (int k = 0; k < d3; ++k) plan.names.push_back("delta:v" + std::to_string(k + 1));
  plan.names.push_back("rho_n");
  plan.truth.resize(plan.theta_dim + 1);
  plan.truth(0) = level.mu_n;
  plan.truth(1) = level.tau_n;
  plan.truth.segment(2, d1) = config.gamma1;
  plan.truth.segment(2 + d1, d2) = config.gamma2;
  plan.truth.segment(2 + d1 + d2, d3) = config.delta;
  plan.truth(plan.theta_dim) = level.rho_n();
  return plan;
}

// One replicate: sample, fit, collect estimates and standard errors
// (the derived rho_n is always the last coordinate).
Replicate run_one(const ExperimentConfig& config, const RunPlan& plan,
                  std::uint64_t cell, double cell_a, double cell_b, int rep) {
  Replicate out;
  const std::uint64_t rep_seed =
      KeyedRng::derive({config.seed, stream::kReplicate, cell,
                        static_cast<std::uint64_t>(rep)});
  const BrSparsitySpec spec{cell_a, cell_b, config.mu0, config.tau0};
  try {
    if (config.model == ModelKind::kBr) {
      const DirectedGraph g = br_sample(config.n, spec, rep_seed);
      const BrFit fit = br_fit(dyad_census(g));
      out.est.resize(3);
      out.est << fit.params.mu_n, fit.params.tau_n, fit.params.rho_n();
      out.se.resize(3);
      out.se << fit.se.se_mu, fit.se.se_tau, fit.se.se_rho;
    } else {
      const std::uint64_t cov_seed =
          config.covariates == CovariateMode::kRedraw ? rep_seed : config.seed;
      const double lo = config.law == CovariateLaw::kUniformPm1 ? -1.0 : 0.0;
      const CovariateSet cov = CovariateSet::uniform(
          config.n, static_cast<int>(config.gamma1.size()),
          static_cast<int>(config.gamma2.size()),
          static_cast<int>(config.delta.size()), cov_seed, lo, 1.0);
      const DirectedGraph g = p15_sample(config.n, spec, config.gamma1,
                                         config.gamma2, config.delta, cov,
                                         rep_seed);
      P15Options options;
      options.tol = config.tol;
      options.max_iter = config.max_iter;
      options.level = config.level;
      options.workers = 1;  // replicates run in parallel instead
      const FitResult fit = p15_fit(g, cov, options);
      if (!fit.inference)
        throw Error(ErrorCode::kSingular, "inference unavailable");
      const int p = plan.theta_dim;
      out.est.resize(p + 1);
      out.est.head(p) = fit.theta.flat();
      out.est(p) = fit.theta.rho_n();
      out.se.resize(p + 1);
      out.se.head(p) = fit.inference->se;
      out.se(p) = fit.inference->se_rho;
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kMleDoesNotExist)
      out.status = Replicate::Status::kNonexistent;
    else if (e.code() == ErrorCode::kNoConvergence ||
             e.code() == ErrorCode::kSingular)
      out.status = Replicate::Status::kNonconverged;
    else
      throw;
  }
  return out;
}

std::vector<Replicate> run_replicates(const ExperimentConfig& config,
                                      const RunPlan& plan, std::uint64_t cell,
                                      double cell_a, double cell_b) {
  std::vector<Replicate> reps(static_cast<std::size_t>(config.replicates));
  parallel_blocks(config.replicates, 1, config.workers,
                  [&](std::int64_t begin, std::int64_t end, std::size_t) {
                    for (std::int64_t r = begin; r < end; ++r)
                      reps[static_cast<std::size_t>(r)] = run_one(
                          config, plan, cell, cell_a, cell_b,
                          static_cast<int>(r));
                  });
  return reps;
}

double median_sorted(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  if (m == 0) return std::numeric_limits<double>::quiet_NaN();
  return m % 2 == 1 ? values[m / 2]
                    : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

}  // namespace

CoverageReport run_coverage(const ExperimentConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const RunPlan plan = make_plan(config);
  const auto reps = run_replicates(config, plan, 0, config.a, config.b);

  CoverageReport report;
  report.n = config.n;
  report.a = config.a;
  report.b = config.b;
  report.level = config.level;
  report.replicates = config.replicates;
  const double crit = normal_critical_value(config.level);

  const int ncoord = static_cast<int>(plan.names.size());
  std::vector<int> covered(static_cast<std::size_t>(ncoord), 0);
  std::vector<std::vector<double>> widths(static_cast<std::size_t>(ncoord));
  std::vector<double> est_sum(static_cast<std::size_t>(ncoord), 0.0);
  for (const auto& rep : reps) {
    if (rep.status == Replicate::Status::kNonexistent) {
      ++report.failures_nonexistent;
      continue;
    }
    if (rep.status == Replicate::Status::kNonconverged) {
      ++report.failures_nonconverged;
      continue;
    }
    ++report.used;
    for (int k = 0; k < ncoord; ++k) {
      const double half = crit * rep.se(k);
      if (std::fabs(rep.est(k) - plan.truth(k)) <= half)
        ++covered[static_cast<std::size_t>(k)];
      widths[static_cast<std::size_t>(k)].push_back(2.0 * half);
      est_sum[static_cast<std::size_t>(k)] += rep.est(k);
    }
  }

  for (int k = 0; k < ncoord; ++k) {
    CoordinateCoverage cc;
    cc.name = plan.names[static_cast<std::size_t>(k)];
    cc.truth = plan.truth(k);
    if (report.used > 0) {
      const double used = static_cast<double>(report.used);
      cc.coverage = covered[static_cast<std::size_t>(k)] / used;
      const double half_band =
          1.959964 * std::sqrt(config.level * (1.0 - config.level) / used);
      cc.band_lo = config.level - half_band;
      cc.band_hi = config.level + half_band;
      cc.median_width = median_sorted(widths[static_cast<std::size_t>(k)]);
      cc.mean_estimate = est_sum[static_cast<std::size_t>(k)] / used;
    }
    report.coords.push_back(std::move(cc));
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

QqReport run_qq(const ExperimentConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const RunPlan plan = make_plan(config);
  const auto reps = run_replicates(config, plan, 0, config.a, config.b);

  QqReport report;
  report.replicates = config.replicates;
  // Standardize the model coordinates only (rho_n is derived).
  const int ncols = plan.theta_dim;
  report.names.assign(plan.names.begin(), plan.names.begin() + ncols);

  std::vector<Eigen::VectorXd> rows;
  for (const auto& rep : reps) {
    if (rep.status == Replicate::Status::kNonexistent) {
      ++report.failures_nonexistent;
      continue;
    }
    if (rep.status == Replicate::Status::kNonconverged) {
      ++report.failures_nonconverged;
      continue;
    }
    Eigen::VectorXd row(ncols);
    for (int k = 0; k < ncols; ++k)
      row(k) = (rep.est(k) - plan.truth(k)) / rep.se(k);
    rows.push_back(std::move(row));
  }
  report.standardized.resize(static_cast<Eigen::Index>(rows.size()), ncols);
  for (std::size_t r = 0; r < rows.size(); ++r)
    report.standardized.row(static_cast<Eigen::Index>(r)) = rows[r];
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

PhaseReport run_phase_transition(const ExperimentConfig& config) {
  config.validate();
  if (config.model != ModelKind::kBr)
    throw Error(ErrorCode::kInvalid,
                "phase-transition study requires model = br");
  const auto t0 = std::chrono::steady_clock::now();

  PhaseReport report;
  report.n = config.n;
  report.mu0 = config.mu0;
  report.rho0 = config.rho0();

  auto cells = config.cells;
  if (cells.empty()) cells.emplace_back(config.a, config.b);

  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const auto [a, b] = cells[ci];
    // Truth moves with the cell, not the config-level (a, b).
    ExperimentConfig cell_config = config;
    cell_config.a = a;
    cell_config.b = b;
    const RunPlan plan = make_plan(cell_config);
    const auto reps = run_replicates(config, plan, ci, a, b);

    PhaseCell cell;
    cell.a = a;
    cell.b = b;
    cell.regime = a < b ? "a<b" : (a > b ? "a>b" : "a=b");

    std::vector<double> mu_dev, tau_dev, rho_dev;
    for (const auto& rep : reps) {
      if (rep.status != Replicate::Status::kOk) {
        ++cell.failures;
        continue;
      }
      mu_dev.push_back(rep.est(0) - plan.truth(0));
      tau_dev.push_back(rep.est(1) - plan.truth(1));
      rho_dev.push_back(rep.est(2) - plan.truth(2));
    }
    cell.used = static_cast<int>(mu_dev.size());
    if (cell.used >= 2) {
      const double m = static_cast<double>(cell.used);
      auto mean_of = [&](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / m;
      };
      const double mu_bar = mean_of(mu_dev);
      const double tau_bar = mean_of(tau_dev);
      const double rho_bar = mean_of(rho_dev);
      double s_mu = 0.0, s_tau = 0.0, s_rho = 0.0, s_mu_rho = 0.0;
      for (std::size_t r = 0; r < mu_dev.size(); ++r) {
        const double dm = mu_dev[r] - mu_bar;
        const double dt = tau_dev[r] - tau_bar;
        const double dr = rho_dev[r] - rho_bar;
        s_mu += dm * dm;
        s_tau += dt * dt;
        s_rho += dr * dr;
        s_mu_rho += dm * dr;
      }
      s_mu /= m - 1.0;
      s_tau /= m - 1.0;
      s_rho /= m - 1.0;
      s_mu_rho /= m - 1.0;
      cell.corr_mu_rho = s_mu_rho / std::sqrt(s_mu * s_rho);

      const double nd = static_cast<double>(config.n);
      cell.var_mu_scaled = std::pow(nd, 2.0 - a) * s_mu;
      cell.var_tau_scaled = std::pow(nd, 2.0 - b) * s_tau;
      cell.var_rho_scaled = std::pow(nd, 2.0 - std::max(a, b)) * s_rho;
    }
    cell.var_mu_expected = std::exp(-config.mu0);
    cell.var_tau_expected = 2.0 * std::exp(-config.tau0);
    const double e_tau_inv = std::exp(-config.tau0);
    const double e_mu_inv = std::exp(-config.mu0);
    if (a < b) cell.var_rho_expected = 2.0 * e_tau_inv;
    else if (a > b) cell.var_rho_expected = 4.0 * e_mu_inv;
    else cell.var_rho_expected = 2.0 * e_tau_inv + 4.0 * e_mu_inv;

    report.cells.push_back(std::move(cell));
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

std::string CoverageReport::to_csv() const {
  std::string out =
      "coordinate,truth,coverage,band_lo,band_hi,median_width,mean_estimate,"
      "used,failures_nonexistent,failures_nonconverged,n,a,b,level\n";
  for (const auto& c : coords) {
    out += c.name + ',' + fmt_double(c.truth) + ',' + fmt_double(c.coverage) +
           ',' + fmt_double(c.band_lo) + ',' + fmt_double(c.band_hi) + ',' +
           fmt_double(c.median_width) + ',' + fmt_double(c.mean_estimate) +
           ',' + fmt_int(used) + ',' + fmt_int(failures_nonexistent) + ',' +
           fmt_int(failures_nonconverged) + ',' + fmt_int(n) + ',' +
           fmt_double(a) + ',' + fmt_double(b) + ',' + fmt_double(level) +
           '\n';
  }
  return out;
}

std::string CoverageReport::to_json() const {
  json j;
  j["n"] = n;
  j["a"] = a;
  j["b"] = b;
  j["level"] = level;
  j["replicates"] = replicates;
  j["used"] = used;
  j["failures"] = {{"nonexistent", failures_nonexistent},
                   {"nonconverged", failures_nonconverged}};
  j["wall_seconds"] = wall_seconds;
  j["coordinates"] = json::array();
  for (const auto& c : coords) {
    j["coordinates"].push_back({{"name", c.name},
                                {"truth", c.truth},
                                {"coverage", c.coverage},
                                {"band", {c.band_lo, c.band_hi}},
                                {"median_width", c.median_width},
                                {"mean_estimate", c.mean_estimate}});
  }
  return j.dump(2) + "\n";
}

std::string QqReport::standardized_csv() const {
  std::string out = "replicate";
  for (const auto& name : names) out += ',' + name;
  out += '\n';
  for (Eigen::Index r = 0; r < standardized.rows(); ++r) {
    out += fmt_int(r + 1);
    for (Eigen::Index k = 0; k < standardized.cols(); ++k)
      out += ',' + fmt_double(standardized(r, k));
    out += '\n';
  }
  return out;
}

std::string QqReport::quantiles_csv() const {
  std::string out = "coordinate,p,theoretical,sample\n";
  const Eigen::Index used_rows = standardized.rows();
  for (Eigen::Index k = 0; k < standardized.cols(); ++k) {
    std::vector<double> column(static_cast<std::size_t>(used_rows));
    for (Eigen::Index r = 0; r < used_rows; ++r)
      column[static_cast<std::size_t>(r)] = standardized(r, k);
    std::sort(column.begin(), column.end());
    for (Eigen::Index r = 0; r < used_rows; ++r) {
      const double p =
          (static_cast<double>(r) + 0.5) / static_cast<double>(used_rows);
      out += names[static_cast<std::size_t>(k)] + ',' + fmt_double(p) + ',' +
             fmt_double(normal_quantile(p)) + ',' +
             fmt_double(column[static_cast<std::size_t>(r)]) + '\n';
    }
  }
  return out;
}

std::string QqReport::to_json() const {
  json j;
  j["names"] = names;
  j["replicates"] = replicates;
  j["used"] = static_cast<int>(standardized.rows());
  j["failures"] = {{"nonexistent", failures_nonexistent},
                   {"nonconverged", failures_nonconverged}};
  j["wall_seconds"] = wall_seconds;
  j["summary"] = json::array();
  for (Eigen::Index k = 0; k < standardized.cols(); ++k) {
    const auto col = standardized.col(k);
    const double mean = col.mean();
    const double sd = standardized.rows() > 1
                          ? std::sqrt((col.array() - mean).square().sum() /
                                      (static_cast<double>(col.size()) - 1.0))
                          : 0.0;
    j["summary"].push_back({{"name", names[static_cast<std::size_t>(k)]},
                            {"mean", mean},
                            {"sd", sd}});
  }
  return j.dump(2) + "\n";
}

std::string PhaseReport::to_csv() const {
  std::string out =
      "a,b,regime,corr_mu_rho,var_mu_scaled,var_mu_expected,var_tau_scaled,"
      "var_tau_expected,var_rho_scaled,var_rho_expected,used,failures\n";
  for (const auto& c : cells) {
    out += fmt_double(c.a) + ',' + fmt_double(c.b) + ',' + c.regime + ',' +
           fmt_double(c.corr_mu_rho) + ',' + fmt_double(c.var_mu_scaled) +
           ',' + fmt_double(c.var_mu_expected) + ',' +
           fmt_double(c.var_tau_scaled) + ',' + fmt_double(c.var_tau_expected) +
           ',' + fmt_double(c.var_rho_scaled) + ',' +
           fmt_double(c.var_rho_expected) + ',' + fmt_int(c.used) + ',' +
           fmt_int(c.failures) + '\n';
  }
  return out;
}

std::string PhaseReport::to_json() const {
  json j;
  j["n"] = n;
  j["mu0"] = mu0;
  j["rho0"] = rho0;
  j["wall_seconds"] = wall_seconds;
  j["cells"] = json::array();
  for (const auto& c : cells) {
    j["cells"].push_back({{"a", c.a},
                          {"b", c.b},
                          {"regime", c.regime},
                          {"corr_mu_rho", c.corr_mu_rho},
                          {"var_mu_scaled", c.var_mu_scaled},
                          {"var_mu_expected", c.var_mu_expected},
                          {"var_tau_scaled", c.var_tau_scaled},
                          {"var_tau_expected", c.var_tau_expected},
                          {"var_rho_scaled", c.var_rho_scaled},
                          {"var_rho_expected", c.var_rho_expected},
                          {"used", c.used},
                          {"failures", c.failures}});
  }
  return j.dump(2) + "\n";
}

}  // namespace recip
