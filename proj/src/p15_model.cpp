#include "recip/p15_model.hpp"

#include <cmath>
#include <limits>

#include "recip/errors.hpp"
#include "recip/numerics.hpp"
#include "recip/parallel.hpp"
#include "recip/rng.hpp"

namespace recip {

namespace {
constexpr double kDivergenceBound = 50.0;
constexpr std::int64_t kDyadBlock = 8192;
}  // namespace

ParamVector::ParamVector(double mu_n, double tau_n, Eigen::VectorXd gamma1,
                         Eigen::VectorXd gamma2, Eigen::VectorXd delta)
    : d1_(static_cast<int>(gamma1.size())),
      d2_(static_cast<int>(gamma2.size())),
      d3_(static_cast<int>(delta.size())),
      theta_(2 + d1_ + d2_ + d3_) {
  theta_(0) = mu_n;
  theta_(1) = tau_n;
  theta_.segment(2, d1_) = gamma1;
  theta_.segment(2 + d1_, d2_) = gamma2;
  theta_.segment(2 + d1_ + d2_, d3_) = delta;
  if (!theta_.allFinite())
    throw Error(ErrorCode::kInvalid, "parameters must be finite");
}

ParamVector ParamVector::from_flat(Eigen::VectorXd theta, int d1, int d2,
                                   int d3) {
  if (theta.size() != 2 + d1 + d2 + d3)
    throw Error(ErrorCode::kInvalid, "parameter vector has wrong length");
  ParamVector p(d1, d2, d3);
  p.theta_ = std::move(theta);
  if (!p.theta_.allFinite())
    throw Error(ErrorCode::kInvalid, "parameters must be finite");
  return p;
}

std::vector<std::string> ParamVector::coordinate_names(
    const CovariateSet& c) const {
  std::vector<std::string> names = {"mu_n", "tau_n"};
  for (const auto& s : c.x_names()) names.push_back("gamma1:" + s);
  for (const auto& s : c.y_names()) names.push_back("gamma2:" + s);
  for (const auto& s : c.v_names()) names.push_back("delta:" + s);
  return names;
}

DyadLinearPredictors dyad_predictors(const ParamVector& p,
                                     const Eigen::RowVectorXd& x_i,
                                     const Eigen::RowVectorXd& x_j,
                                     const Eigen::RowVectorXd& y_i,
                                     const Eigen::RowVectorXd& y_j,
                                     const Eigen::RowVectorXd& v_ij) {
  DyadLinearPredictors out;
  const double sx_i = x_i * p.gamma1();
  const double sx_j = x_j * p.gamma1();
  const double sy_i = y_i * p.gamma2();
  const double sy_j = y_j * p.gamma2();
  out.f1 = p.mu_n() + sx_i + sy_j;
  out.f2 = p.mu_n() + sx_j + sy_i;
  out.f3 = p.tau_n() + sx_i + sx_j + sy_i + sy_j + v_ij * p.delta();
  out.log_k = log_normalizer(out.f1, out.f2, out.f3);
  out.k = std::exp(out.log_k);
  return out;
}

std::array<double, 4> dyad_probabilities(const ParamVector& p,
                                         const Eigen::RowVectorXd& x_i,
                                         const Eigen::RowVectorXd& x_j,
                                         const Eigen::RowVectorXd& y_i,
                                         const Eigen::RowVectorXd& y_j,
                                         const Eigen::RowVectorXd& v_ij) {
  const auto lp = dyad_predictors(p, x_i, x_j, y_i, y_j, v_ij);
  return {std::exp(-lp.log_k), std::exp(lp.f1 - lp.log_k),
          std::exp(lp.f2 - lp.log_k), std::exp(lp.f3 - lp.log_k)};
}

Eigen::VectorXd sufficient_statistics(const DirectedGraph& g,
                                      const CovariateSet& c) {
  if (g.node_count() != c.node_count())
    throw Error(ErrorCode::kInvalid, "covariates not aligned with graph");
  const int d1 = c.d1(), d2 = c.d2(), d3 = c.d3();
  Eigen::VectorXd t = Eigen::VectorXd::Zero(2 + d1 + d2 + d3);
  const DyadCensus census = dyad_census(g);
  t(0) = static_cast<double>(census.d_asym);
  t(1) = static_cast<double>(census.d_mut);
  for (const auto& [from, to] : g.sorted_edges()) {
    t.segment(2, d1) += c.x().row(from);
    t.segment(2 + d1, d2) += c.y().row(to);
    if (from < to && g.has_edge(to, from))
      t.segment(2 + d1 + d2, d3) += c.v_row(from, to);
  }
  return t;
}

namespace {

struct EvalRequest {
  bool grad = false;
  bool hess = false;
};

struct EvalResult {
  double nll = 0.0;            // sum over dyads
  Eigen::VectorXd grad;        // sum E[T] - t
  Eigen::MatrixXd hess;        // sum Cov(T)
};

// Sum of log k_ij and, on request, the per-dyad multinomial moments. The
// data enter only through the sufficient statistics, so this needs just the
// covariates; `t` (when given) is subtracted from the moment sum.
EvalResult evaluate(const ParamVector& p, const CovariateSet& c,
                    const Eigen::VectorXd* t, const EvalRequest& req,
                    int workers) {
  const std::int64_t n = c.node_count();
  const std::int64_t dyads = n * (n - 1) / 2;
  const int d1 = c.d1(), d2 = c.d2(), d3 = c.d3();
  const int dim = 2 + d1 + d2 + d3;

  // Per-node and per-dyad scores; the dyad loop is then covariate-dot free.
  const Eigen::VectorXd sx = c.x() * p.gamma1();
  const Eigen::VectorXd sy = c.y() * p.gamma2();
  const Eigen::VectorXd sv = c.v() * p.delta();
  const double mu = p.mu_n(), tau = p.tau_n();

  struct Partial {
    double nll = 0.0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
  };
  const std::size_t nblocks =
      static_cast<std::size_t>((dyads + kDyadBlock - 1) / kDyadBlock);
  std::vector<Partial> partials(std::max<std::size_t>(nblocks, 1));

  parallel_blocks(dyads, kDyadBlock, workers, [&](std::int64_t begin,
                                                  std::int64_t end,
                                                  std::size_t bi) {
    Partial& part = partials[bi];
    if (req.grad) part.grad = Eigen::VectorXd::Zero(dim);
    if (req.hess) part.hess = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd e(dim), t10(dim), t01(dim), t11(dim);

    auto [i, j] = pair_from_index(n, begin);
    for (std::int64_t k = begin; k < end; ++k) {
      const double f1 = mu + sx(i) + sy(j);
      const double f2 = mu + sx(j) + sy(i);
      const double f3 = tau + sx(i) + sx(j) + sy(i) + sy(j) + sv(k);

      const double m = std::max({0.0, f1, f2, f3});
      const double e0 = std::exp(-m);
      const double e1 = std::exp(f1 - m);
      const double e2 = std::exp(f2 - m);
      const double e3 = std::exp(f3 - m);
      const double ksum = e0 + e1 + e2 + e3;
      part.nll += m + std::log(ksum);

      if (req.grad || req.hess) {
        const double q10 = e1 / ksum;
        const double q01 = e2 / ksum;
        const double q11 = e3 / ksum;

        e.setZero();
        e(0) = q10 + q01;
        e(1) = q11;
        e.segment(2, d1) = (q10 + q11) * c.x().row(i).transpose() +
                           (q01 + q11) * c.x().row(j).transpose();
        e.segment(2 + d1, d2) = (q01 + q11) * c.y().row(i).transpose() +
                                (q10 + q11) * c.y().row(j).transpose();
        e.segment(2 + d1 + d2, d3) = q11 * c.v().row(k).transpose();
        if (req.grad) part.grad += e;

        if (req.hess) {
          t10.setZero();
          t10(0) = 1.0;
          t10.segment(2, d1) = c.x().row(i).transpose();
          t10.segment(2 + d1, d2) = c.y().row(j).transpose();

          t01.setZero();
          t01(0) = 1.0;
          t01.segment(2, d1) = c.x().row(j).transpose();
          t01.segment(2 + d1, d2) = c.y().row(i).transpose();

          t11.setZero();
          t11(1) = 1.0;
          t11.segment(2, d1) =
              c.x().row(i).transpose() + c.x().row(j).transpose();
          t11.segment(2 + d1, d2) =
              c.y().row(i).transpose() + c.y().row(j).transpose();
          t11.segment(2 + d1 + d2, d3) = c.v().row(k).transpose();

          auto h = part.hess.selfadjointView<Eigen::Lower>();
          h.rankUpdate(t10, q10);
          h.rankUpdate(t01, q01);
          h.rankUpdate(t11, q11);
          h.rankUpdate(e, -1.0);
        }
      }

      if (++j == n) j = ++i + 1;
    }
  });

  EvalResult out;
  if (req.grad) out.grad = Eigen::VectorXd::Zero(dim);
  if (req.hess) out.hess = Eigen::MatrixXd::Zero(dim, dim);
  for (const Partial& part : partials) {
    out.nll += part.nll;
    if (req.grad && part.grad.size() > 0) out.grad += part.grad;
    if (req.hess && part.hess.size() > 0) out.hess += part.hess;
  }
  out.nll -= (t != nullptr) ? p.flat().dot(*t) : 0.0;
  if (req.grad && t != nullptr) out.grad -= *t;
  if (req.hess)
    out.hess = out.hess.selfadjointView<Eigen::Lower>();  // symmetrize
  return out;
}

void check_shapes(const ParamVector& p, const CovariateSet& c) {
  if (p.d1() != c.d1() || p.d2() != c.d2() || p.d3() != c.d3())
    throw Error(ErrorCode::kInvalid,
                "parameter blocks do not match covariate dimensions");
}

}  // namespace

double p15_nll(const ParamVector& p, const DirectedGraph& g,
               const CovariateSet& c, int workers) {
  check_shapes(p, c);
  const Eigen::VectorXd t = sufficient_statistics(g, c);
  return evaluate(p, c, &t, {}, workers).nll;
}

Eigen::VectorXd p15_gradient(const ParamVector& p, const DirectedGraph& g,
                             const CovariateSet& c, int workers) {
  check_shapes(p, c);
  const Eigen::VectorXd t = sufficient_statistics(g, c);
  EvalRequest req;
  req.grad = true;
  return evaluate(p, c, &t, req, workers).grad;
}

Eigen::MatrixXd p15_hessian(const ParamVector& p, const DirectedGraph& g,
                            const CovariateSet& c, int workers) {
  check_shapes(p, c);
  if (g.node_count() != c.node_count())
    throw Error(ErrorCode::kInvalid, "covariates not aligned with graph");
  EvalRequest req;
  req.hess = true;
  return evaluate(p, c, nullptr, req, workers).hess;
}

FitResult p15_fit(const DirectedGraph& g, const CovariateSet& c,
                  const P15Options& options) {
  if (g.node_count() != c.node_count())
    throw Error(ErrorCode::kInvalid, "covariates not aligned with graph");
  const std::int64_t n = g.node_count();
  const double dyads = static_cast<double>(n) * (n - 1) / 2.0;
  if (dyads < 1) throw Error(ErrorCode::kInvalid, "need at least 2 nodes");
  const DyadCensus census = dyad_census(g);
  const Eigen::VectorXd t = sufficient_statistics(g, c);

  ParamVector theta(c.d1(), c.d2(), c.d3());
  if (options.init) {
    check_shapes(*options.init, c);
    theta = *options.init;
  } else {
    const BrFit br = br_fit(census);  // throws when a census class is empty
    theta = ParamVector(br.params.mu_n, br.params.tau_n,
                        Eigen::VectorXd::Zero(c.d1()),
                        Eigen::VectorXd::Zero(c.d2()),
                        Eigen::VectorXd::Zero(c.d3()));
  }

  EvalRequest full;
  full.grad = full.hess = true;

  FitResult fit{theta, theta.coordinate_names(c), n, 0.0, 0.0,
                Eigen::MatrixXd(), std::nullopt, 0, false};
  EvalResult cur = evaluate(theta, c, &t, full, options.workers);
  double scaled_nll = cur.nll / dyads;

  int iter = 0;
  bool converged = false;
  while (iter < options.max_iter) {
    // Boundary drift outranks apparent convergence: the gradient decays
    // exponentially along a runaway coordinate.
    if (theta.flat().cwiseAbs().maxCoeff() > kDivergenceBound) {
      int worst = 0;
      theta.flat().cwiseAbs().maxCoeff(&worst);
      throw MleDoesNotExist(
          "boundary", "MLE does not exist: coordinate " +
                          fit.names[static_cast<std::size_t>(worst)] +
                          " diverged beyond |" +
                          std::to_string(kDivergenceBound) +
                          "| while the likelihood kept improving");
    }
    const Eigen::VectorXd scaled_grad = cur.grad / dyads;
    fit.grad_norm = scaled_grad.lpNorm<Eigen::Infinity>();
    if (fit.grad_norm < options.tol) {
      converged = true;
      break;
    }
    ++iter;

    const Eigen::MatrixXd scaled_hess = cur.hess / dyads;
    bool accepted = false;
    double shift = 0.0;
    while (!accepted) {
      Eigen::MatrixXd h = scaled_hess;
      if (shift > 0.0) h.diagonal().array() += shift;
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
      bool usable = ldlt.info() == Eigen::Success;
      Eigen::VectorXd step;
      if (usable) {
        step = ldlt.solve(-scaled_grad);
        usable = step.allFinite() && scaled_grad.dot(step) < 0.0;
      }
      if (usable) {
        // Accept a decrease up to rounding noise: the true decrease of the
        // final Newton steps sits below double rounding of the objective.
        const double slack = 1e-14 * (1.0 + std::fabs(scaled_nll));
        double alpha = 1.0;
        for (int halving = 0; halving <= 30; ++halving) {
          const ParamVector trial = ParamVector::from_flat(
              theta.flat() + alpha * step, c.d1(), c.d2(), c.d3());
          EvalRequest nll_only;
          EvalResult trial_eval =
              evaluate(trial, c, &t, nll_only, options.workers);
          if (trial_eval.nll / dyads < scaled_nll + slack) {
            theta = trial;
            cur = evaluate(theta, c, &t, full, options.workers);
            scaled_nll = cur.nll / dyads;
            accepted = true;
            break;
          }
          alpha *= 0.5;
        }
      }
      if (!accepted) {
        shift = shift == 0.0 ? 1e-8 : shift * 10.0;
        if (shift > 1e10)
          throw Error(ErrorCode::kNoConvergence,
                      "Newton step failed to decrease the objective");
      }
    }
  }

  fit.theta = theta;
  fit.nll = cur.nll;
  fit.grad_norm = (cur.grad / dyads).lpNorm<Eigen::Infinity>();
  fit.hessian_scaled = cur.hess / dyads;
  fit.iterations = iter;
  fit.converged = converged;
  if (!converged)
    throw Error(ErrorCode::kNoConvergence,
                "no convergence after " + std::to_string(options.max_iter) +
                    " iterations (gradient norm " +
                    std::to_string(fit.grad_norm) + ")");

  try {
    fit.inference = p15_inference(fit, n, options.level);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kSingular) throw;
    fit.inference = std::nullopt;
  }
  return fit;
}

Inference p15_inference(const FitResult& fit, std::int64_t n, double level) {
  const int dim = fit.theta.dim();
  if (fit.hessian_scaled.rows() != dim || !fit.converged)
    throw Error(ErrorCode::kInvalid,
                "inference requires a converged fit with its Hessian");

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      fit.hessian_scaled);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::kSingular, "Hessian eigendecomposition failed");
  const double max_eig = solver.eigenvalues().maxCoeff();
  const double min_eig = solver.eigenvalues().minCoeff();
  if (!(min_eig > 0.0) || min_eig < max_eig * 1e-12)
    throw Error(ErrorCode::kSingular,
                "inference unavailable: empirical Hessian is singular "
                "(minimum eigenvalue " +
                    std::to_string(min_eig) + ")");

  const Eigen::MatrixXd inv =
      solver.eigenvectors() *
      solver.eigenvalues().cwiseInverse().asDiagonal() *
      solver.eigenvectors().transpose();

  Inference out;
  out.level = level;
  out.hessian_cond = max_eig / min_eig;
  const double nd = static_cast<double>(n);
  const double crit = normal_critical_value(level);
  out.se.resize(dim);
  out.z.resize(dim);
  out.ci_lo.resize(dim);
  out.ci_hi.resize(dim);
  for (int k = 0; k < dim; ++k) {
    const double est = fit.theta.flat()(k);
    out.se(k) = std::sqrt(2.0 * inv(k, k)) / nd;
    out.z(k) = est / out.se(k);
    out.ci_lo(k) = est - crit * out.se(k);
    out.ci_hi(k) = est + crit * out.se(k);
  }

  // rho_n = tau_n - 2 mu_n by the delta method.
  Eigen::VectorXd grad_rho = Eigen::VectorXd::Zero(dim);
  grad_rho(0) = -2.0;
  grad_rho(1) = 1.0;
  const double var_rho =
      (2.0 / (nd * nd)) * grad_rho.dot(inv * grad_rho);
  const double rho = fit.theta.rho_n();
  out.se_rho = std::sqrt(var_rho);
  out.rho_z = rho / out.se_rho;
  out.rho_ci_lo = rho - crit * out.se_rho;
  out.rho_ci_hi = rho + crit * out.se_rho;
  return out;
}

DirectedGraph p15_sample(std::int64_t n, const BrSparsitySpec& spec,
                         const Eigen::VectorXd& gamma1,
                         const Eigen::VectorXd& gamma2,
                         const Eigen::VectorXd& delta, const CovariateSet& c,
                         std::uint64_t seed) {
  spec.validate();
  if (n != c.node_count())
    throw Error(ErrorCode::kInvalid, "covariates not aligned with n");
  if (n < 2) throw Error(ErrorCode::kInvalid, "need at least 2 nodes");
  const BrParams level = spec.at(n);
  const ParamVector p(level.mu_n, level.tau_n, gamma1, gamma2, delta);
  check_shapes(p, c);

  const Eigen::VectorXd sx = c.x() * p.gamma1();
  const Eigen::VectorXd sy = c.y() * p.gamma2();
  const Eigen::VectorXd sv = c.v() * p.delta();

  DirectedGraph g(n);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = i + 1; j < n; ++j) {
      const double f1 = p.mu_n() + sx(i) + sy(j);
      const double f2 = p.mu_n() + sx(j) + sy(i);
      const double f3 =
          p.tau_n() + sx(i) + sx(j) + sy(i) + sy(j) + sv(pair_index(n, i, j));
      const double log_k = log_normalizer(f1, f2, f3);
      const double p00 = std::exp(-log_k);
      const double p10 = std::exp(f1 - log_k);
      const double p01 = std::exp(f2 - log_k);

      auto rng = KeyedRng::from(
          {seed, stream::kDyad, std::uint64_t(i), std::uint64_t(j)});
      const double u = rng.next_unit();
      if (u < p00) continue;
      if (u < p00 + p10) {
        g.add_edge(i, j);
      } else if (u < p00 + p10 + p01) {
        g.add_edge(j, i);
      } else {
        g.add_edge(i, j);
        g.add_edge(j, i);
      }
    }
  }
  return g;
}

}  // namespace recip
