#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "recip/graph.hpp"

namespace recip {

// Node-level outgoingness covariates X (n x d1), incomingness covariates
// Y (n x d2) and symmetric dyad covariates V, stored once per unordered pair
// in pair_index order (n(n-1)/2 x d3). All entries must be finite.
class CovariateSet {
 public:
  CovariateSet(std::int64_t n, Eigen::MatrixXd x, Eigen::MatrixXd y,
               Eigen::MatrixXd v, std::vector<std::string> x_names = {},
               std::vector<std::string> y_names = {},
               std::vector<std::string> v_names = {});

  static CovariateSet zero(std::int64_t n, int d1, int d2, int d3);

  // i.i.d. uniform entries on [lo, hi), reproducible per (seed, node/dyad).
  static CovariateSet uniform(std::int64_t n, int d1, int d2, int d3,
                              std::uint64_t seed, double lo = 0.0,
                              double hi = 1.0);

  std::int64_t node_count() const { return n_; }
  int d1() const { return static_cast<int>(x_.cols()); }
  int d2() const { return static_cast<int>(y_.cols()); }
  int d3() const { return static_cast<int>(v_.cols()); }

  const Eigen::MatrixXd& x() const { return x_; }
  const Eigen::MatrixXd& y() const { return y_; }
  const Eigen::MatrixXd& v() const { return v_; }

  // Row of V for the unordered pair {i, j}.
  Eigen::MatrixXd::ConstRowXpr v_row(std::int64_t i, std::int64_t j) const {
    return v_.row(i < j ? pair_index(n_, i, j) : pair_index(n_, j, i));
  }

  const std::vector<std::string>& x_names() const { return x_names_; }
  const std::vector<std::string>& y_names() const { return y_names_; }
  const std::vector<std::string>& v_names() const { return v_names_; }

  // Subtracts empirical column means (X, Y over nodes; V over dyads).
  void center();

 private:
  std::int64_t n_ = 0;
  Eigen::MatrixXd x_, y_, v_;
  std::vector<std::string> x_names_, y_names_, v_names_;
};

struct CovariateLoadOptions {
  char delimiter = ',';
  bool center = false;
  // Labels found in the node file but absent from the graph become isolated
  // nodes instead of an error. Off by default.
  bool add_missing_nodes = false;
};

// Loads node covariates (header `node,<cols...>`; x_cols / y_cols pick the
// named columns) and, when dyad_path is nonempty, dyad covariates (header
// `node_a,node_b,<cols...>`, one row per unordered pair or consistent
// duplicates). Every graph node needs a node row; every unordered pair needs
// a dyad row.
CovariateSet load_covariates(DirectedGraph& g, const std::string& node_path,
                             const std::string& dyad_path,
                             const std::vector<std::string>& x_cols,
                             const std::vector<std::string>& y_cols,
                             const CovariateLoadOptions& options = {});

void write_covariates(const CovariateSet& c, const DirectedGraph& g,
                      const std::string& node_path,
                      const std::string& dyad_path, char delimiter = ',');

struct ConditioningReport {
  double min_eigenvalue = 0.0;
  double threshold = 0.0;
  bool warning = false;
  int dim = 0;
};

// Minimum eigenvalue of the empirical covariance of the stacked vector
// (X_i + X_j, Y_i + Y_j, V_ij) over all unordered pairs. Near-zero values
// flag covariates under which the model is not identified.
ConditioningReport check_covariate_conditioning(const CovariateSet& c,
                                                const DirectedGraph& g,
                                                double threshold = 1e-8);

}  // namespace recip
