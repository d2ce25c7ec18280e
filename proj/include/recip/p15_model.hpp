#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "recip/br_model.hpp"
#include "recip/covariates.hpp"
#include "recip/graph.hpp"

namespace recip {

// Parameter vector in the fixed layout (mu_n, tau_n, gamma1, gamma2, delta).
// All vector and matrix indexing throughout the library uses this layout.
class ParamVector {
 public:
  ParamVector(int d1, int d2, int d3)
      : d1_(d1), d2_(d2), d3_(d3),
        theta_(Eigen::VectorXd::Zero(2 + d1 + d2 + d3)) {}

  ParamVector(double mu_n, double tau_n, Eigen::VectorXd gamma1,
              Eigen::VectorXd gamma2, Eigen::VectorXd delta);

  static ParamVector from_flat(Eigen::VectorXd theta, int d1, int d2, int d3);

  int dim() const { return static_cast<int>(theta_.size()); }
  int d1() const { return d1_; }
  int d2() const { return d2_; }
  int d3() const { return d3_; }

  double mu_n() const { return theta_(0); }
  double tau_n() const { return theta_(1); }
  double rho_n() const { return tau_n() - 2.0 * mu_n(); }
  auto gamma1() const { return theta_.segment(2, d1_); }
  auto gamma2() const { return theta_.segment(2 + d1_, d2_); }
  auto delta() const { return theta_.segment(2 + d1_ + d2_, d3_); }

  const Eigen::VectorXd& flat() const { return theta_; }

  // Coordinate names in layout order: mu_n, tau_n, then covariate names
  // prefixed gamma1:/gamma2:/delta:.
  std::vector<std::string> coordinate_names(const CovariateSet& c) const;

 private:
  int d1_, d2_, d3_;
  Eigen::VectorXd theta_;
};

// Linear predictors of one dyad and its normalizer k = 1 + e^f1 + e^f2 + e^f3.
struct DyadLinearPredictors {
  double f1 = 0.0;  // (1,0): mu + X_i'g1 + Y_j'g2
  double f2 = 0.0;  // (0,1): mu + X_j'g1 + Y_i'g2
  double f3 = 0.0;  // (1,1): tau + (X_i+X_j)'g1 + (Y_i+Y_j)'g2 + V_ij'delta
  double k = 1.0;
  double log_k = 0.0;
};

DyadLinearPredictors dyad_predictors(const ParamVector& p,
                                     const Eigen::RowVectorXd& x_i,
                                     const Eigen::RowVectorXd& x_j,
                                     const Eigen::RowVectorXd& y_i,
                                     const Eigen::RowVectorXd& y_j,
                                     const Eigen::RowVectorXd& v_ij);

// Probabilities of the four configurations (p00, p10, p01, p11); sums to 1.
std::array<double, 4> dyad_probabilities(const ParamVector& p,
                                         const Eigen::RowVectorXd& x_i,
                                         const Eigen::RowVectorXd& x_j,
                                         const Eigen::RowVectorXd& y_i,
                                         const Eigen::RowVectorXd& y_j,
                                         const Eigen::RowVectorXd& v_ij);

// Per-graph totals pairing with the parameter layout:
//   (d_asym, d_mut, sum A_ij X_i + A_ji X_j, sum A_ij Y_j + A_ji Y_i,
//    sum A_ij A_ji V_ij).
Eigen::VectorXd sufficient_statistics(const DirectedGraph& g,
                                      const CovariateSet& c);

// Negative log-likelihood, analytic gradient and Hessian (sums over dyads):
//   nll  = sum log k_ij - <theta, t>
//   grad = sum E[T_ij] - t
//   hess = sum Cov(T_ij)
// Accumulation runs over fixed dyad blocks combined in index order, so the
// result is identical for any worker count.
double p15_nll(const ParamVector& p, const DirectedGraph& g,
               const CovariateSet& c, int workers = 1);
Eigen::VectorXd p15_gradient(const ParamVector& p, const DirectedGraph& g,
                             const CovariateSet& c, int workers = 1);
Eigen::MatrixXd p15_hessian(const ParamVector& p, const DirectedGraph& g,
                            const CovariateSet& c, int workers = 1);

struct P15Options {
  double tol = 1e-10;  // inf-norm of the dyad-averaged gradient
  int max_iter = 200;
  double level = 0.95;
  int workers = 1;
  std::optional<ParamVector> init;  // default: BR closed form, zero covariates
};

// Wald inference from the empirical Hessian H_n of the dyad-averaged
// objective: se_k = sqrt(2 (H_n^{-1})_kk) / n per coordinate, plus the
// delta-method standard error of rho_n = tau_n - 2 mu_n.
struct Inference {
  Eigen::VectorXd se, z, ci_lo, ci_hi;
  double se_rho = 0.0, rho_z = 0.0, rho_ci_lo = 0.0, rho_ci_hi = 0.0;
  double hessian_cond = 0.0;
  double level = 0.95;
};

struct FitResult {
  ParamVector theta;
  std::vector<std::string> names;
  std::int64_t n = 0;
  double nll = 0.0;        // sum over dyads at the optimum
  double grad_norm = 0.0;  // inf-norm of the dyad-averaged gradient
  Eigen::MatrixXd hessian_scaled;  // H_n: Hessian of nll / C(n,2)
  std::optional<Inference> inference;  // absent when H_n is singular
  int iterations = 0;
  bool converged = false;
};

// Damped Newton with step-halving and a Levenberg diagonal shift when the
// Hessian solve fails. Throws MleDoesNotExist when an estimate drifts past
// |theta_k| > 50 (boundary), NoConvergence after max_iter.
FitResult p15_fit(const DirectedGraph& g, const CovariateSet& c,
                  const P15Options& options = {});

// Inference from a converged fit; throws kSingular when the empirical
// Hessian is not invertible.
Inference p15_inference(const FitResult& fit, std::int64_t n,
                        double level = 0.95);

// Covariate-conditional sampler at mu_n = -a log n + mu, tau_n = -b log n + tau.
DirectedGraph p15_sample(std::int64_t n, const BrSparsitySpec& spec,
                         const Eigen::VectorXd& gamma1,
                         const Eigen::VectorXd& gamma2,
                         const Eigen::VectorXd& delta, const CovariateSet& c,
                         std::uint64_t seed);

}  // namespace recip
