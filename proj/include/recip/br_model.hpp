#pragma once

#include <array>
#include <cstdint>

#include "recip/graph.hpp"

namespace recip {

// Dyad-level parameters on the log-odds scale. rho_n is always derived from
// (mu_n, tau_n); the two parameterizations have the same maximizer.
struct BrParams {
  double mu_n = 0.0;
  double tau_n = 0.0;

  double rho_n() const { return tau_n - 2.0 * mu_n; }
};

// Simulation-only description of a sparse regime: mu_n = -a log n + mu,
// tau_n = -b log n + tau with sparsity indices a, b in (0, 2). The four
// constants are not identifiable from a single network; they exist to drive
// samplers and experiments.
struct BrSparsitySpec {
  double a = 0.5;
  double b = 0.5;
  double mu = 0.0;
  double tau = 0.0;

  void validate() const;
  BrParams at(std::int64_t n) const;
};

struct BrStdErrors {
  double se_mu = 0.0;
  double se_tau = 0.0;
  double se_rho = 0.0;
};

struct BrFit {
  BrParams params;
  BrStdErrors se;
  DyadCensus census;
  double nll = 0.0;
};

// Negative log-likelihood of a census:
//   D log(1 + 2 e^mu + e^tau) - mu * d_asym - tau * d_mut,  D = n(n-1)/2.
double br_nll(const DyadCensus& census, const BrParams& params);

// Closed-form MLE: mu = log(d_asym / 2 d_null), tau = log(d_mut / d_null).
// All three census classes must be nonempty; throws MleDoesNotExist naming
// the empty class otherwise. The result is checked to be a stationary point
// of the dyad-averaged negative log-likelihood.
BrFit br_fit(const DyadCensus& census);

// Plug-in standard errors:
//   se_mu  = 1 / (n e^{mu/2})
//   se_tau = sqrt(2) / (n e^{tau/2})
//   se_rho = sqrt(2 e^{mu} + 4 e^{tau}) / (n sqrt(e^{mu} e^{tau}))
BrStdErrors br_standard_errors(const BrParams& params, std::int64_t n);

// Per-dyad configuration probabilities (p00, p10, p01, p11) at size n.
std::array<double, 4> br_dyad_probabilities(std::int64_t n,
                                            const BrSparsitySpec& spec);

// Independent dyads; dyad {i,j} consumes the stream keyed by (seed, i, j),
// so the draw does not depend on evaluation order.
DirectedGraph br_sample(std::int64_t n, const BrSparsitySpec& spec,
                        std::uint64_t seed);

}  // namespace recip
