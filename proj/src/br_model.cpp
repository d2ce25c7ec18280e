#include "recip/br_model.hpp"

#include <cmath>
#include <string>

#include "recip/errors.hpp"
#include "recip/numerics.hpp"
#include "recip/rng.hpp"

namespace recip {

void BrSparsitySpec::validate() const {
  if (!(a > 0.0 && a < 2.0) || !(b > 0.0 && b < 2.0))
    throw Error(ErrorCode::kInvalid,
                "sparsity indices must satisfy 0 < a < 2 and 0 < b < 2 (got a=" +
                    std::to_string(a) + ", b=" + std::to_string(b) + ")");
  if (!std::isfinite(mu) || !std::isfinite(tau))
    throw Error(ErrorCode::kInvalid, "mu and tau must be finite");
}

BrParams BrSparsitySpec::at(std::int64_t n) const {
  const double logn = std::log(static_cast<double>(n));
  return {mu + -a * logn, tau + -b * logn};
}

double br_nll(const DyadCensus& census, const BrParams& params) {
  // log(1 + 2 e^mu + e^tau) = lse(0, log2 + mu, tau)
  const double m = std::max({0.0, std::log(2.0) + params.mu_n, params.tau_n});
  const double lk =
      m + std::log(std::exp(-m) + std::exp(std::log(2.0) + params.mu_n - m) +
                   std::exp(params.tau_n - m));
  return static_cast<double>(census.dyads()) * lk -
         params.mu_n * static_cast<double>(census.d_asym) -
         params.tau_n * static_cast<double>(census.d_mut);
}

namespace {

// Gradient of the dyad-averaged negative log-likelihood.
void br_scaled_gradient(const DyadCensus& census, const BrParams& params,
                        double* g_mu, double* g_tau) {
  const double m = std::max({0.0, std::log(2.0) + params.mu_n, params.tau_n});
  const double e0 = std::exp(-m);
  const double ea = std::exp(std::log(2.0) + params.mu_n - m);
  const double em = std::exp(params.tau_n - m);
  const double k = e0 + ea + em;
  const double dyads = static_cast<double>(census.dyads());
  *g_mu = ea / k - static_cast<double>(census.d_asym) / dyads;
  *g_tau = em / k - static_cast<double>(census.d_mut) / dyads;
}

}  // namespace

BrFit br_fit(const DyadCensus& census) {
  if (census.d_null <= 0) throw MleDoesNotExist("null");
  if (census.d_asym <= 0) throw MleDoesNotExist("asymmetric");
  if (census.d_mut <= 0) throw MleDoesNotExist("mutual");

  BrFit fit;
  fit.census = census;
  fit.params.mu_n = std::log(static_cast<double>(census.d_asym) /
                             (2.0 * static_cast<double>(census.d_null)));
  fit.params.tau_n = std::log(static_cast<double>(census.d_mut) /
                              static_cast<double>(census.d_null));
  fit.nll = br_nll(census, fit.params);
  fit.se = br_standard_errors(fit.params, census.n);

  double g_mu, g_tau;
  br_scaled_gradient(census, fit.params, &g_mu, &g_tau);
  if (std::max(std::fabs(g_mu), std::fabs(g_tau)) > 1e-10)
    throw Error(ErrorCode::kNoConvergence,
                "closed-form estimate failed the stationarity check");
  return fit;
}

BrStdErrors br_standard_errors(const BrParams& params, std::int64_t n) {
  const double nd = static_cast<double>(n);
  const double e_mu = std::exp(params.mu_n);
  const double e_tau = std::exp(params.tau_n);
  BrStdErrors se;
  se.se_mu = 1.0 / (nd * std::sqrt(e_mu));
  se.se_tau = std::sqrt(2.0) / (nd * std::sqrt(e_tau));
  se.se_rho = std::sqrt(2.0 * e_mu + 4.0 * e_tau) / (nd * std::sqrt(e_mu * e_tau));
  return se;
}

std::array<double, 4> br_dyad_probabilities(std::int64_t n,
                                            const BrSparsitySpec& spec) {
  spec.validate();
  const double na = std::pow(static_cast<double>(n), -spec.a);
  const double nb = std::pow(static_cast<double>(n), -spec.b);
  const double w = na * std::exp(spec.mu);
  const double m = nb * std::exp(spec.tau);
  const double k = 1.0 + 2.0 * w + m;
  return {1.0 / k, w / k, w / k, m / k};
}

DirectedGraph br_sample(std::int64_t n, const BrSparsitySpec& spec,
                        std::uint64_t seed) {
  spec.validate();
  if (n < 2) throw Error(ErrorCode::kInvalid, "need at least 2 nodes");
  const auto p = br_dyad_probabilities(n, spec);
  DirectedGraph g(n);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = i + 1; j < n; ++j) {
      auto rng = KeyedRng::from(
          {seed, stream::kDyad, std::uint64_t(i), std::uint64_t(j)});
      const double u = rng.next_unit();
      if (u < p[0]) continue;          // (0,0)
      if (u < p[0] + p[1]) {
        g.add_edge(i, j);              // (1,0)
      } else if (u < p[0] + p[1] + p[2]) {
        g.add_edge(j, i);              // (0,1)
      } else {
        g.add_edge(i, j);              // (1,1)
        g.add_edge(j, i);
      }
    }
  }
  return g;
}

}  // namespace recip
