#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "recip/p15_model.hpp"

namespace recip {

enum class ModelKind { kBr, kP15 };

// Whether covariates are drawn fresh per replicate or once per experiment.
enum class CovariateMode { kRedraw, kFixed };

// Covariate generator: i.i.d. uniform on [0,1) or centered on [-1,1).
enum class CovariateLaw { kUniform01, kUniformPm1 };

// One simulation design: truth at the fixed level (mu, tau, gamma1, gamma2,
// delta), sparsity indices, covariate generator (i.i.d. standard uniform)
// and replication controls. Parsed from a key = value text file.
struct ExperimentConfig {
  ModelKind model = ModelKind::kP15;
  std::int64_t n = 200;
  double a = 0.5;
  double b = 0.5;
  double mu0 = 0.2;
  double tau0 = 0.5;
  Eigen::VectorXd gamma1, gamma2, delta;
  int replicates = 1000;
  CovariateMode covariates = CovariateMode::kRedraw;
  CovariateLaw law = CovariateLaw::kUniform01;
  std::uint64_t seed = 1;
  int workers = 0;  // 0: RECIP_WORKERS env or hardware
  double tol = 1e-10;
  int max_iter = 200;
  double level = 0.95;
  std::vector<std::pair<double, double>> cells;  // phase grid of (a, b)

  double rho0() const { return tau0 - 2.0 * mu0; }
  BrSparsitySpec spec() const { return {a, b, mu0, tau0}; }
  void validate() const;

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);
};

struct CoordinateCoverage {
  std::string name;
  double truth = 0.0;       // at the n-dependent level
  double coverage = 0.0;    // fraction of used replicates covering truth
  double band_lo = 0.0;     // binomial band a true-level mechanism would hit
  double band_hi = 0.0;
  double median_width = 0.0;
  double mean_estimate = 0.0;
};

struct CoverageReport {
  std::int64_t n = 0;
  double a = 0.0, b = 0.0;
  double level = 0.95;
  std::vector<CoordinateCoverage> coords;
  int replicates = 0;
  int used = 0;
  int failures_nonexistent = 0;
  int failures_nonconverged = 0;
  double wall_seconds = 0.0;

  std::string to_csv() const;
  std::string to_json() const;
};

struct QqReport {
  std::vector<std::string> names;
  Eigen::MatrixXd standardized;  // used x coordinates
  int replicates = 0;
  int failures_nonexistent = 0;
  int failures_nonconverged = 0;
  double wall_seconds = 0.0;

  std::string standardized_csv() const;
  // Long-form (coordinate, p, theoretical, sample) quantile pairs.
  std::string quantiles_csv() const;
  std::string to_json() const;
};

struct PhaseCell {
  double a = 0.0, b = 0.0;
  std::string regime;  // "a<b", "a=b", "a>b"
  double corr_mu_rho = 0.0;
  double var_mu_scaled = 0.0;   // var of sqrt(n^{2-a}) (mu_hat - mu_n0)
  double var_mu_expected = 0.0;  // exp(-mu0)
  double var_tau_scaled = 0.0;  // var of sqrt(n^{2-b}) (tau_hat - tau_n0)
  double var_tau_expected = 0.0;  // 2 exp(-tau0)
  double var_rho_scaled = 0.0;  // var of sqrt(n^{2-max(a,b)}) (rho_hat - rho_n0)
  double var_rho_expected = 0.0;  // regime-dependent v
  int used = 0;
  int failures = 0;
};

struct PhaseReport {
  std::int64_t n = 0;
  double mu0 = 0.0, rho0 = 0.0;
  std::vector<PhaseCell> cells;
  double wall_seconds = 0.0;

  std::string to_csv() const;
  std::string to_json() const;
};

// For each replicate: sample covariates (p15) and a graph, fit, form
// level-confidence intervals, record containment and width per coordinate.
// Replicates whose MLE does not exist or whose fit does not converge are
// counted and excluded. Deterministic given (config, seed).
CoverageReport run_coverage(const ExperimentConfig& config);

// Standardized estimates (theta_hat_k - theta_n0_k) / se_k per replicate.
QqReport run_qq(const ExperimentConfig& config);

// BR-design study of corr(mu_hat, rho_hat) and the rate-scaled variances
// across a grid of (a, b) cells.
PhaseReport run_phase_transition(const ExperimentConfig& config);

}  // namespace recip
