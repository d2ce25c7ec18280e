/*
 * reciprocity: fitting and simulating sparse directed networks with
 * reciprocity (the BR and p15 dyad models).
 *
 * C API over the C++ core. Objects are opaque handles created and destroyed
 * here; every fallible call returns a recip_status and leaves a message for
 * recip_last_error() on failure. Strings returned through char** are heap
 * allocations owned by the caller; release them with recip_string_free().
 * Handles are safe to read concurrently once constructed.
 */

#ifndef RECIPROCITY_H
#define RECIPROCITY_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum recip_status {
  RECIP_OK = 0,
  RECIP_ERR_IO = 1,
  RECIP_ERR_PARSE = 2,
  RECIP_ERR_INVALID = 3,
  RECIP_ERR_MLE_DOES_NOT_EXIST = 4,
  RECIP_ERR_NO_CONVERGENCE = 5,
  RECIP_ERR_SINGULAR = 6,
  RECIP_ERR_INTERNAL = 7
} recip_status;

typedef struct recip_graph recip_graph;
typedef struct recip_covariates recip_covariates;
typedef struct recip_fit recip_fit;
typedef struct recip_config recip_config;
typedef struct recip_report recip_report;

/* Message for the most recent failure on this thread. */
const char* recip_last_error(void);
void recip_string_free(char* s);

/* ------------------------------------------------------------------ graph */

recip_status recip_graph_create(int64_t n_nodes, recip_graph** out);
recip_status recip_graph_add_edge(recip_graph* g, int64_t from, int64_t to);

/* Two-column source<delim>target records. skip_header drops the first row.
 * n_nodes > 0 fixes the node count; labels must then be integer indices in
 * [0, n_nodes) (missing indices become isolated nodes). n_nodes = 0 infers
 * nodes from labels in order of first appearance. */
recip_status recip_graph_load_edge_list(const char* path, char delimiter,
                                        int skip_header, int64_t n_nodes,
                                        recip_graph** out);
recip_status recip_graph_write_edge_list(const recip_graph* g,
                                         const char* path, char delimiter);
void recip_graph_free(recip_graph* g);

int64_t recip_graph_node_count(const recip_graph* g);
int64_t recip_graph_edge_count(const recip_graph* g);
/* Borrowed pointer, valid while the graph lives. NULL if out of range. */
const char* recip_graph_node_label(const recip_graph* g, int64_t index);
recip_status recip_graph_census(const recip_graph* g, int64_t* d_null,
                                int64_t* d_asym, int64_t* d_mut);

/* ------------------------------------------------------------- covariates */

/* Node file header: node,<cols...>; x_cols / y_cols are comma-separated
 * column names. Dyad file (optional, pass NULL or "") header:
 * node_a,node_b,<cols...>, one row per unordered pair (or consistent
 * duplicates). center subtracts empirical means. add_missing_nodes lets
 * node-file labels absent from the graph join as isolated nodes. */
recip_status recip_covariates_load(recip_graph* g, const char* node_path,
                                   const char* dyad_path, const char* x_cols,
                                   const char* y_cols, char delimiter,
                                   int center, int add_missing_nodes,
                                   recip_covariates** out);
/* i.i.d. standard uniform covariates for simulation. */
recip_status recip_covariates_uniform(int64_t n, int d1, int d2, int d3,
                                      uint64_t seed, recip_covariates** out);
/* Same with an explicit range [lo, hi), e.g. -1, 1 for centered uniforms. */
recip_status recip_covariates_uniform_range(int64_t n, int d1, int d2, int d3,
                                            uint64_t seed, double lo,
                                            double hi, recip_covariates** out);
recip_status recip_covariates_write(const recip_covariates* c,
                                    const recip_graph* g,
                                    const char* node_path,
                                    const char* dyad_path, char delimiter);
/* Minimum eigenvalue of the dyad-level covariate covariance; *warning is set
 * when it falls below threshold (pass threshold <= 0 for the 1e-8 default). */
recip_status recip_covariates_conditioning(const recip_covariates* c,
                                           const recip_graph* g,
                                           double threshold,
                                           double* min_eigenvalue,
                                           int* warning);
void recip_covariates_free(recip_covariates* c);
int recip_covariates_d1(const recip_covariates* c);
int recip_covariates_d2(const recip_covariates* c);
int recip_covariates_d3(const recip_covariates* c);

/* ---------------------------------------------------------------- fitting */

typedef struct recip_fit_options {
  double tol;      /* gradient tolerance on the dyad-averaged objective */
  int max_iter;    /* Newton iteration cap */
  double level;    /* confidence level for intervals */
  int workers;     /* 0: RECIP_WORKERS env or hardware */
} recip_fit_options;

void recip_fit_options_init(recip_fit_options* options);

/* Closed-form BR fit with plug-in standard errors. Coordinates:
 * mu_n, tau_n, rho_n. */
recip_status recip_fit_br(const recip_graph* g, double level,
                          recip_fit** out);
/* Newton fit of the covariate model with empirical-Hessian inference.
 * Coordinates: mu_n, tau_n, per-column gamma1/gamma2/delta, then rho_n. */
recip_status recip_fit_p15(const recip_graph* g, const recip_covariates* c,
                           const recip_fit_options* options, recip_fit** out);
void recip_fit_free(recip_fit* f);

int recip_fit_coord_count(const recip_fit* f);
const char* recip_fit_coord_name(const recip_fit* f, int k);
/* "X", "Y", "V" for covariate coordinates, "" otherwise. */
const char* recip_fit_coord_group(const recip_fit* f, int k);
double recip_fit_estimate(const recip_fit* f, int k);
/* 0 when standard errors are unavailable (singular empirical Hessian). */
int recip_fit_has_inference(const recip_fit* f);
double recip_fit_se(const recip_fit* f, int k);
double recip_fit_z(const recip_fit* f, int k);
recip_status recip_fit_ci(const recip_fit* f, int k, double* lo, double* hi);
double recip_fit_nll(const recip_fit* f);
int recip_fit_iterations(const recip_fit* f);
int recip_fit_converged(const recip_fit* f);
recip_status recip_fit_json(const recip_fit* f, char** out);

/* ------------------------------------------------------------- simulation */

/* Dyads are independent; the draw for pair (i, j) depends only on
 * (seed, i, j), so output is reproducible for any scheduling. Sparsity
 * indices must satisfy 0 < a < 2, 0 < b < 2. */
recip_status recip_simulate_br(int64_t n, double a, double b, double mu,
                               double tau, uint64_t seed, recip_graph** out);
recip_status recip_simulate_p15(int64_t n, double a, double b, double mu,
                                double tau, const double* gamma1, int d1,
                                const double* gamma2, int d2,
                                const double* delta, int d3,
                                const recip_covariates* c, uint64_t seed,
                                recip_graph** out);

/* ------------------------------------------------------------ experiments */

recip_status recip_config_load(const char* path, recip_config** out);
recip_status recip_config_parse(const char* text, recip_config** out);
recip_status recip_config_set_seed(recip_config* c, uint64_t seed);
recip_status recip_config_set_workers(recip_config* c, int workers);
void recip_config_free(recip_config* c);

recip_status recip_run_coverage(const recip_config* c, recip_report** out);
recip_status recip_run_qq(const recip_config* c, recip_report** out);
recip_status recip_run_phase(const recip_config* c, recip_report** out);

/* Documents by name: coverage/phase reports provide "csv" and "json";
 * qq reports provide "standardized_csv", "quantiles_csv" and "json". */
recip_status recip_report_get(const recip_report* r, const char* doc,
                              char** out);
void recip_report_free(recip_report* r);

#ifdef __cplusplus
}
#endif

#endif /* RECIPROCITY_H */
