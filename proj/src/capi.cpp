#include "reciprocity.h"

#include <cstring>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "recip/br_model.hpp"
#include "recip/covariates.hpp"
#include "recip/errors.hpp"
#include "recip/fit_json.hpp"
#include "recip/graph.hpp"
#include "recip/mc_lab.hpp"
#include "recip/numerics.hpp"
#include "recip/p15_model.hpp"
#include "recip/parallel.hpp"

namespace {

thread_local std::string g_last_error;

recip_status status_of(const recip::Error& e) {
  switch (e.code()) {
    case recip::ErrorCode::kIo: return RECIP_ERR_IO;
    case recip::ErrorCode::kParse: return RECIP_ERR_PARSE;
    case recip::ErrorCode::kInvalid: return RECIP_ERR_INVALID;
    case recip::ErrorCode::kMleDoesNotExist: return RECIP_ERR_MLE_DOES_NOT_EXIST;
    case recip::ErrorCode::kNoConvergence: return RECIP_ERR_NO_CONVERGENCE;
    case recip::ErrorCode::kSingular: return RECIP_ERR_SINGULAR;
  }
  return RECIP_ERR_INTERNAL;
}

template <typename Fn>
recip_status guarded(Fn&& fn) {
  try {
    fn();
    return RECIP_OK;
  } catch (const recip::Error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RECIP_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return RECIP_ERR_INTERNAL;
  }
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<std::string> split_names(const char* csv) {
  std::vector<std::string> out;
  if (csv == nullptr) return out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t b = item.find_first_not_of(" \t");
    std::size_t e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

recip_status set_invalid(const char* message) {
  g_last_error = message;
  return RECIP_ERR_INVALID;
}

}  // namespace

struct recip_graph {
  recip::DirectedGraph graph;
};

struct recip_covariates {
  recip::CovariateSet set;
};

// One row per reported coordinate; rho_n is appended for p15 fits.
struct recip_fit {
  std::vector<std::string> names;
  std::vector<std::string> groups;
  std::vector<double> estimate, se, z, ci_lo, ci_hi;
  bool has_inference = false;
  double nll = 0.0;
  int iterations = 0;
  bool converged = true;
  std::string json;
};

struct recip_config {
  recip::ExperimentConfig config;
};

struct recip_report {
  std::map<std::string, std::string> docs;
};

extern "C" {

const char* recip_last_error(void) { return g_last_error.c_str(); }

void recip_string_free(char* s) { delete[] s; }

recip_status recip_graph_create(int64_t n_nodes, recip_graph** out) {
  if (out == nullptr) return set_invalid("out must not be NULL");
  return guarded([&] { *out = new recip_graph{recip::DirectedGraph(n_nodes)}; });
}

recip_status recip_graph_add_edge(recip_graph* g, int64_t from, int64_t to) {
  if (g == nullptr) return set_invalid("graph must not be NULL");
  return guarded([&] { g->graph.add_edge(from, to); });
}

recip_status recip_graph_load_edge_list(const char* path, char delimiter,
                                        int skip_header, int64_t n_nodes,
                                        recip_graph** out) {
  if (path == nullptr || out == nullptr)
    return set_invalid("path and out must not be NULL");
  return guarded([&] {
    recip::EdgeListOptions options;
    options.delimiter = delimiter == 0 ? ',' : delimiter;
    options.skip_header = skip_header != 0;
    options.n_nodes = n_nodes;
    *out = new recip_graph{recip::load_edge_list(path, options)};
  });
}

recip_status recip_graph_write_edge_list(const recip_graph* g,
                                         const char* path, char delimiter) {
  if (g == nullptr || path == nullptr)
    return set_invalid("graph and path must not be NULL");
  return guarded([&] {
    recip::write_edge_list(g->graph, path, delimiter == 0 ? ',' : delimiter);
  });
}

void recip_graph_free(recip_graph* g) { delete g; }

int64_t recip_graph_node_count(const recip_graph* g) {
  return g == nullptr ? 0 : g->graph.node_count();
}

int64_t recip_graph_edge_count(const recip_graph* g) {
  return g == nullptr ? 0 : g->graph.edge_count();
}

const char* recip_graph_node_label(const recip_graph* g, int64_t index) {
  if (g == nullptr || index < 0 || index >= g->graph.node_count())
    return nullptr;
  return g->graph.label(index).c_str();
}

recip_status recip_graph_census(const recip_graph* g, int64_t* d_null,
                                int64_t* d_asym, int64_t* d_mut) {
  if (g == nullptr) return set_invalid("graph must not be NULL");
  return guarded([&] {
    const recip::DyadCensus census = recip::dyad_census(g->graph);
    if (d_null != nullptr) *d_null = census.d_null;
    if (d_asym != nullptr) *d_asym = census.d_asym;
    if (d_mut != nullptr) *d_mut = census.d_mut;
  });
}

recip_status recip_covariates_load(recip_graph* g, const char* node_path,
                                   const char* dyad_path, const char* x_cols,
                                   const char* y_cols, char delimiter,
                                   int center, int add_missing_nodes,
                                   recip_covariates** out) {
  if (g == nullptr || node_path == nullptr || out == nullptr)
    return set_invalid("graph, node_path and out must not be NULL");
  return guarded([&] {
    recip::CovariateLoadOptions options;
    options.delimiter = delimiter == 0 ? ',' : delimiter;
    options.center = center != 0;
    options.add_missing_nodes = add_missing_nodes != 0;
    *out = new recip_covariates{recip::load_covariates(
        g->graph, node_path, dyad_path == nullptr ? "" : dyad_path,
        split_names(x_cols), split_names(y_cols), options)};
  });
}

recip_status recip_covariates_uniform(int64_t n, int d1, int d2, int d3,
                                      uint64_t seed, recip_covariates** out) {
  return recip_covariates_uniform_range(n, d1, d2, d3, seed, 0.0, 1.0, out);
}

recip_status recip_covariates_uniform_range(int64_t n, int d1, int d2, int d3,
                                            uint64_t seed, double lo,
                                            double hi, recip_covariates** out) {
  if (out == nullptr) return set_invalid("out must not be NULL");
  if (!(lo < hi)) return set_invalid("need lo < hi");
  return guarded([&] {
    *out = new recip_covariates{
        recip::CovariateSet::uniform(n, d1, d2, d3, seed, lo, hi)};
  });
}

recip_status recip_covariates_write(const recip_covariates* c,
                                    const recip_graph* g,
                                    const char* node_path,
                                    const char* dyad_path, char delimiter) {
  if (c == nullptr || g == nullptr || node_path == nullptr)
    return set_invalid("covariates, graph and node_path must not be NULL");
  return guarded([&] {
    recip::write_covariates(c->set, g->graph, node_path,
                            dyad_path == nullptr ? "" : dyad_path,
                            delimiter == 0 ? ',' : delimiter);
  });
}

recip_status recip_covariates_conditioning(const recip_covariates* c,
                                           const recip_graph* g,
                                           double threshold,
                                           double* min_eigenvalue,
                                           int* warning) {
  if (c == nullptr || g == nullptr)
    return set_invalid("covariates and graph must not be NULL");
  return guarded([&] {
    const auto report = recip::check_covariate_conditioning(
        c->set, g->graph, threshold > 0.0 ? threshold : 1e-8);
    if (min_eigenvalue != nullptr) *min_eigenvalue = report.min_eigenvalue;
    if (warning != nullptr) *warning = report.warning ? 1 : 0;
  });
}

void recip_covariates_free(recip_covariates* c) { delete c; }

int recip_covariates_d1(const recip_covariates* c) {
  return c == nullptr ? 0 : c->set.d1();
}
int recip_covariates_d2(const recip_covariates* c) {
  return c == nullptr ? 0 : c->set.d2();
}
int recip_covariates_d3(const recip_covariates* c) {
  return c == nullptr ? 0 : c->set.d3();
}

void recip_fit_options_init(recip_fit_options* options) {
  if (options == nullptr) return;
  options->tol = 1e-10;
  options->max_iter = 200;
  options->level = 0.95;
  options->workers = 0;
}

recip_status recip_fit_br(const recip_graph* g, double level,
                          recip_fit** out) {
  if (g == nullptr || out == nullptr)
    return set_invalid("graph and out must not be NULL");
  return guarded([&] {
    const recip::DyadCensus census = recip::dyad_census(g->graph);
    const recip::BrFit fit = recip::br_fit(census);
    const double crit = recip::normal_critical_value(level);
    auto result = std::make_unique<recip_fit>();
    result->names = {"mu_n", "tau_n", "rho_n"};
    result->groups = {"", "", ""};
    result->estimate = {fit.params.mu_n, fit.params.tau_n, fit.params.rho_n()};
    result->se = {fit.se.se_mu, fit.se.se_tau, fit.se.se_rho};
    result->has_inference = true;
    for (int k = 0; k < 3; ++k) {
      result->z.push_back(result->estimate[std::size_t(k)] /
                          result->se[std::size_t(k)]);
      result->ci_lo.push_back(result->estimate[std::size_t(k)] -
                              crit * result->se[std::size_t(k)]);
      result->ci_hi.push_back(result->estimate[std::size_t(k)] +
                              crit * result->se[std::size_t(k)]);
    }
    result->nll = fit.nll;
    result->json = recip::br_fit_json(fit, level);
    *out = result.release();
  });
}

recip_status recip_fit_p15(const recip_graph* g, const recip_covariates* c,
                           const recip_fit_options* options, recip_fit** out) {
  if (g == nullptr || c == nullptr || out == nullptr)
    return set_invalid("graph, covariates and out must not be NULL");
  return guarded([&] {
    recip::P15Options opt;
    if (options != nullptr) {
      opt.tol = options->tol;
      opt.max_iter = options->max_iter;
      opt.level = options->level;
      opt.workers = options->workers;
    }
    opt.workers = recip::resolve_workers(opt.workers);
    const recip::FitResult fit = recip::p15_fit(g->graph, c->set, opt);

    auto result = std::make_unique<recip_fit>();
    const int dim = fit.theta.dim();
    for (int k = 0; k < dim; ++k) {
      result->names.push_back(fit.names[std::size_t(k)]);
      result->groups.push_back(recip::coordinate_group(fit.names[std::size_t(k)]));
      result->estimate.push_back(fit.theta.flat()(k));
    }
    result->names.push_back("rho_n");
    result->groups.push_back("");
    result->estimate.push_back(fit.theta.rho_n());
    result->has_inference = fit.inference.has_value();
    if (fit.inference) {
      for (int k = 0; k < dim; ++k) {
        result->se.push_back(fit.inference->se(k));
        result->z.push_back(fit.inference->z(k));
        result->ci_lo.push_back(fit.inference->ci_lo(k));
        result->ci_hi.push_back(fit.inference->ci_hi(k));
      }
      result->se.push_back(fit.inference->se_rho);
      result->z.push_back(fit.inference->rho_z);
      result->ci_lo.push_back(fit.inference->rho_ci_lo);
      result->ci_hi.push_back(fit.inference->rho_ci_hi);
    }
    result->nll = fit.nll;
    result->iterations = fit.iterations;
    result->converged = fit.converged;
    result->json = recip::p15_fit_json(fit);
    *out = result.release();
  });
}

void recip_fit_free(recip_fit* f) { delete f; }

int recip_fit_coord_count(const recip_fit* f) {
  return f == nullptr ? 0 : static_cast<int>(f->names.size());
}

const char* recip_fit_coord_name(const recip_fit* f, int k) {
  if (f == nullptr || k < 0 || k >= static_cast<int>(f->names.size()))
    return nullptr;
  return f->names[std::size_t(k)].c_str();
}

const char* recip_fit_coord_group(const recip_fit* f, int k) {
  if (f == nullptr || k < 0 || k >= static_cast<int>(f->groups.size()))
    return nullptr;
  return f->groups[std::size_t(k)].c_str();
}

double recip_fit_estimate(const recip_fit* f, int k) {
  if (f == nullptr || k < 0 || k >= static_cast<int>(f->estimate.size()))
    return 0.0;
  return f->estimate[std::size_t(k)];
}

int recip_fit_has_inference(const recip_fit* f) {
  return f != nullptr && f->has_inference ? 1 : 0;
}

double recip_fit_se(const recip_fit* f, int k) {
  if (f == nullptr || !f->has_inference || k < 0 ||
      k >= static_cast<int>(f->se.size()))
    return 0.0;
  return f->se[std::size_t(k)];
}

double recip_fit_z(const recip_fit* f, int k) {
  if (f == nullptr || !f->has_inference || k < 0 ||
      k >= static_cast<int>(f->z.size()))
    return 0.0;
  return f->z[std::size_t(k)];
}

recip_status recip_fit_ci(const recip_fit* f, int k, double* lo, double* hi) {
  if (f == nullptr) return set_invalid("fit must not be NULL");
  if (!f->has_inference) {
    g_last_error = "inference unavailable: empirical Hessian is singular";
    return RECIP_ERR_SINGULAR;
  }
  if (k < 0 || k >= static_cast<int>(f->ci_lo.size()))
    return set_invalid("coordinate index out of range");
  if (lo != nullptr) *lo = f->ci_lo[std::size_t(k)];
  if (hi != nullptr) *hi = f->ci_hi[std::size_t(k)];
  return RECIP_OK;
}

double recip_fit_nll(const recip_fit* f) { return f == nullptr ? 0.0 : f->nll; }

int recip_fit_iterations(const recip_fit* f) {
  return f == nullptr ? 0 : f->iterations;
}

int recip_fit_converged(const recip_fit* f) {
  return f != nullptr && f->converged ? 1 : 0;
}

recip_status recip_fit_json(const recip_fit* f, char** out) {
  if (f == nullptr || out == nullptr)
    return set_invalid("fit and out must not be NULL");
  *out = copy_string(f->json);
  return RECIP_OK;
}

recip_status recip_simulate_br(int64_t n, double a, double b, double mu,
                               double tau, uint64_t seed, recip_graph** out) {
  if (out == nullptr) return set_invalid("out must not be NULL");
  return guarded([&] {
    *out = new recip_graph{recip::br_sample(n, {a, b, mu, tau}, seed)};
  });
}

recip_status recip_simulate_p15(int64_t n, double a, double b, double mu,
                                double tau, const double* gamma1, int d1,
                                const double* gamma2, int d2,
                                const double* delta, int d3,
                                const recip_covariates* c, uint64_t seed,
                                recip_graph** out) {
  if (out == nullptr || c == nullptr)
    return set_invalid("covariates and out must not be NULL");
  if ((d1 > 0 && gamma1 == nullptr) || (d2 > 0 && gamma2 == nullptr) ||
      (d3 > 0 && delta == nullptr))
    return set_invalid("parameter arrays must not be NULL when d > 0");
  return guarded([&] {
    const Eigen::VectorXd g1 = Eigen::Map<const Eigen::VectorXd>(gamma1, d1);
    const Eigen::VectorXd g2 = Eigen::Map<const Eigen::VectorXd>(gamma2, d2);
    const Eigen::VectorXd de = Eigen::Map<const Eigen::VectorXd>(delta, d3);
    *out = new recip_graph{
        recip::p15_sample(n, {a, b, mu, tau}, g1, g2, de, c->set, seed)};
  });
}

recip_status recip_config_load(const char* path, recip_config** out) {
  if (path == nullptr || out == nullptr)
    return set_invalid("path and out must not be NULL");
  return guarded([&] {
    *out = new recip_config{recip::ExperimentConfig::load(path)};
  });
}

recip_status recip_config_parse(const char* text, recip_config** out) {
  if (text == nullptr || out == nullptr)
    return set_invalid("text and out must not be NULL");
  return guarded([&] {
    *out = new recip_config{recip::ExperimentConfig::parse(text)};
  });
}

recip_status recip_config_set_seed(recip_config* c, uint64_t seed) {
  if (c == nullptr) return set_invalid("config must not be NULL");
  c->config.seed = seed;
  return RECIP_OK;
}

recip_status recip_config_set_workers(recip_config* c, int workers) {
  if (c == nullptr) return set_invalid("config must not be NULL");
  c->config.workers = workers;
  return RECIP_OK;
}

void recip_config_free(recip_config* c) { delete c; }

recip_status recip_run_coverage(const recip_config* c, recip_report** out) {
  if (c == nullptr || out == nullptr)
    return set_invalid("config and out must not be NULL");
  return guarded([&] {
    const recip::CoverageReport report = recip::run_coverage(c->config);
    auto r = std::make_unique<recip_report>();
    r->docs["csv"] = report.to_csv();
    r->docs["json"] = report.to_json();
    *out = r.release();
  });
}

recip_status recip_run_qq(const recip_config* c, recip_report** out) {
  if (c == nullptr || out == nullptr)
    return set_invalid("config and out must not be NULL");
  return guarded([&] {
    const recip::QqReport report = recip::run_qq(c->config);
    auto r = std::make_unique<recip_report>();
    r->docs["standardized_csv"] = report.standardized_csv();
    r->docs["quantiles_csv"] = report.quantiles_csv();
    r->docs["json"] = report.to_json();
    *out = r.release();
  });
}

recip_status recip_run_phase(const recip_config* c, recip_report** out) {
  if (c == nullptr || out == nullptr)
    return set_invalid("config and out must not be NULL");
  return guarded([&] {
    const recip::PhaseReport report = recip::run_phase_transition(c->config);
    auto r = std::make_unique<recip_report>();
    r->docs["csv"] = report.to_csv();
    r->docs["json"] = report.to_json();
    *out = r.release();
  });
}

recip_status recip_report_get(const recip_report* r, const char* doc,
                              char** out) {
  if (r == nullptr || doc == nullptr || out == nullptr)
    return set_invalid("report, doc and out must not be NULL");
  const auto it = r->docs.find(doc);
  if (it == r->docs.end()) {
    g_last_error = std::string("no such report document: ") + doc;
    return RECIP_ERR_INVALID;
  }
  *out = copy_string(it->second);
  return RECIP_OK;
}

void recip_report_free(recip_report* r) { delete r; }

}  // extern "C"
