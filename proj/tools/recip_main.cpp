// recip: fit and simulate directed-network reciprocity models (BR / p15)
// and run the Monte-Carlo experiment harness. Talks to libreciprocity
// exclusively through the public C API.

#include <CLI11.hpp>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "reciprocity.h"

namespace {

using nlohmann::json;

// Exit codes: 0 success, 1 validation/input error, 2 model error.
int exit_code_for(recip_status status) {
  switch (status) {
    case RECIP_OK:
      return 0;
    case RECIP_ERR_MLE_DOES_NOT_EXIST:
    case RECIP_ERR_NO_CONVERGENCE:
    case RECIP_ERR_SINGULAR:
      return 2;
    default:
      return 1;
  }
}

int fail(recip_status status) {
  std::fprintf(stderr, "error: %s\n", recip_last_error());
  return exit_code_for(status);
}

struct CStr {
  char* ptr = nullptr;
  ~CStr() { recip_string_free(ptr); }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  ~Handle() { Free(ptr); }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using GraphHandle = Handle<recip_graph, recip_graph_free>;
using CovHandle = Handle<recip_covariates, recip_covariates_free>;
using FitHandle = Handle<recip_fit, recip_fit_free>;
using ConfigHandle = Handle<recip_config, recip_config_free>;
using ReportHandle = Handle<recip_report, recip_report_free>;

bool write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
  return static_cast<bool>(out);
}

void print_fit_table(const recip_fit* fit, double level) {
  const int count = recip_fit_coord_count(fit);
  std::size_t name_width = 9;  // "Covariate"
  for (int k = 0; k < count; ++k) {
    std::string name = recip_fit_coord_name(fit, k);
    const std::size_t colon = name.find(':');
    if (colon != std::string::npos) name = name.substr(colon + 1);
    name_width = std::max(name_width, name.size());
  }
  std::printf("%-4s  %-*s  %9s", "Type", static_cast<int>(name_width),
              "Covariate", "Estimate");
  if (recip_fit_has_inference(fit))
    std::printf("  %.0f%% CI", level * 100.0);
  std::printf("\n");
  for (int k = 0; k < count; ++k) {
    std::string name = recip_fit_coord_name(fit, k);
    const std::size_t colon = name.find(':');
    if (colon != std::string::npos) name = name.substr(colon + 1);
    std::printf("%-4s  %-*s  %9.2f", recip_fit_coord_group(fit, k),
                static_cast<int>(name_width), name.c_str(),
                recip_fit_estimate(fit, k));
    if (recip_fit_has_inference(fit)) {
      double lo = 0.0, hi = 0.0;
      recip_fit_ci(fit, k, &lo, &hi);
      std::printf("  (%.2f, %.2f)", lo, hi);
    }
    std::printf("\n");
  }
}

std::string fit_csv(const recip_fit* fit) {
  std::string out = "name,group,estimate,se,z,ci_lo,ci_hi\n";
  const bool inference = recip_fit_has_inference(fit) != 0;
  char buf[160];
  for (int k = 0; k < recip_fit_coord_count(fit); ++k) {
    if (inference) {
      double lo = 0.0, hi = 0.0;
      recip_fit_ci(fit, k, &lo, &hi);
      std::snprintf(buf, sizeof(buf),
                    "%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                    recip_fit_coord_name(fit, k), recip_fit_coord_group(fit, k),
                    recip_fit_estimate(fit, k), recip_fit_se(fit, k),
                    recip_fit_z(fit, k), lo, hi);
    } else {
      std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,,,,\n",
                    recip_fit_coord_name(fit, k), recip_fit_coord_group(fit, k),
                    recip_fit_estimate(fit, k));
    }
    out += buf;
  }
  return out;
}

struct CommonGraphArgs {
  std::string edges;
  std::string delim = ",";
  bool header = false;
  std::int64_t n_nodes = 0;
};

void add_graph_options(CLI::App* cmd, CommonGraphArgs& args) {
  cmd->add_option("--edges", args.edges, "Edge list file (source,target)")
      ->required();
  cmd->add_option("--delim", args.delim, "Field delimiter (default ,)");
  cmd->add_flag("--header", args.header, "Skip the first row");
  cmd->add_option("--n-nodes", args.n_nodes,
                  "Fix the node count; labels must be indices in [0, N)");
}

recip_status load_graph(const CommonGraphArgs& args, GraphHandle& graph) {
  const char delim = args.delim.empty() ? ',' : args.delim[0];
  return recip_graph_load_edge_list(args.edges.c_str(), delim,
                                    args.header ? 1 : 0, args.n_nodes,
                                    graph.out());
}

int run_experiment(const std::string& kind, const std::string& config_path,
                   const std::string& out_prefix, bool seed_set,
                   std::uint64_t seed, int workers) {
  ConfigHandle config;
  recip_status status = recip_config_load(config_path.c_str(), config.out());
  if (status != RECIP_OK) return fail(status);
  if (seed_set) recip_config_set_seed(config.get(), seed);
  if (workers > 0) recip_config_set_workers(config.get(), workers);

  ReportHandle report;
  if (kind == "coverage")
    status = recip_run_coverage(config.get(), report.out());
  else if (kind == "qq")
    status = recip_run_qq(config.get(), report.out());
  else
    status = recip_run_phase(config.get(), report.out());
  if (status != RECIP_OK) return fail(status);

  const std::vector<std::pair<std::string, std::string>> docs =
      kind == "qq" ? std::vector<std::pair<std::string, std::string>>{
                         {"standardized_csv", "_standardized.csv"},
                         {"quantiles_csv", "_quantiles.csv"},
                         {"json", ".json"}}
                   : std::vector<std::pair<std::string, std::string>>{
                         {"csv", ".csv"}, {"json", ".json"}};
  for (const auto& [doc, suffix] : docs) {
    CStr text;
    status = recip_report_get(report.get(), doc.c_str(), &text.ptr);
    if (status != RECIP_OK) return fail(status);
    if (out_prefix.empty()) {
      if (doc != "json") std::fputs(text.ptr, stdout);
    } else {
      const std::string path = out_prefix + suffix;
      if (!write_text(path, text.ptr)) {
        std::fprintf(stderr, "error: cannot write %s\n", path.c_str());
        return 1;
      }
      std::printf("wrote %s\n", path.c_str());
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Directed-network reciprocity models: BR and p15"};
  app.require_subcommand(1);

  // ---- fit ----
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model to an edge list");
  CommonGraphArgs fit_graph_args;
  add_graph_options(fit_cmd, fit_graph_args);
  std::string model = "br";
  fit_cmd->add_option("--model", model, "br or p15")
      ->check(CLI::IsMember({"br", "p15"}));
  std::string node_cov, dyad_cov, x_cols, y_cols;
  bool center = false, nodes_from_cov = false, quiet = false;
  fit_cmd->add_option("--node-cov", node_cov,
                      "Node covariate file (header: node,<cols...>)");
  fit_cmd->add_option("--dyad-cov", dyad_cov,
                      "Dyad covariate file (header: node_a,node_b,<cols...>)");
  fit_cmd->add_option("--x-cols", x_cols,
                      "Comma-separated node columns used as X (outgoingness)");
  fit_cmd->add_option("--y-cols", y_cols,
                      "Comma-separated node columns used as Y (incomingness)");
  fit_cmd->add_flag("--center", center, "Center covariates at zero mean");
  fit_cmd->add_flag("--nodes-from-cov", nodes_from_cov,
                    "Add node-file labels missing from the graph as isolated "
                    "nodes");
  std::string out_path, format = "json";
  double level = 0.95, tol = 1e-10;
  int max_iter = 200, workers = 0;
  fit_cmd->add_option("--out", out_path, "Write the fit document here");
  fit_cmd->add_option("--format", format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  fit_cmd->add_option("--level", level, "Confidence level (default 0.95)")
      ->check(CLI::Range(1e-6, 1.0 - 1e-6));
  fit_cmd->add_option("--tol", tol, "Gradient tolerance (default 1e-10)");
  fit_cmd->add_option("--max-iter", max_iter, "Newton iteration cap");
  fit_cmd->add_option("--workers", workers,
                      "Worker threads (default: RECIP_WORKERS or hardware)");
  fit_cmd->add_flag("--quiet", quiet, "Suppress the human-readable table");

  // ---- simulate ----
  auto* sim_cmd = app.add_subcommand("simulate", "Sample a network");
  std::string sim_model = "br", sim_out, manifest_path, cov_prefix;
  std::string sim_node_cov, sim_dyad_cov, sim_x_cols, sim_y_cols;
  std::int64_t sim_n = 0;
  double sim_a = 0.5, sim_b = 0.5, sim_mu = 0.0, sim_tau = 0.0;
  std::vector<double> gamma1, gamma2, delta;
  int d1 = 0, d2 = 0, d3 = 0;
  std::uint64_t sim_seed = 1;
  std::string sim_delim = ",";
  sim_cmd->add_option("--model", sim_model, "br or p15")
      ->check(CLI::IsMember({"br", "p15"}));
  sim_cmd->add_option("--n", sim_n, "Node count")->required();
  sim_cmd->add_option("--a", sim_a, "Non-reciprocal sparsity index, (0,2)")
      ->required();
  sim_cmd->add_option("--b", sim_b, "Reciprocal sparsity index, (0,2)")
      ->required();
  sim_cmd->add_option("--mu", sim_mu, "Baseline constant mu")->required();
  sim_cmd->add_option("--tau", sim_tau, "Reciprocal constant tau")->required();
  sim_cmd->add_option("--gamma1", gamma1, "Outgoingness coefficients");
  sim_cmd->add_option("--gamma2", gamma2, "Incomingness coefficients");
  sim_cmd->add_option("--delta", delta, "Reciprocity coefficients");
  sim_cmd->add_option("--d1", d1, "Generate d1 uniform X columns");
  sim_cmd->add_option("--d2", d2, "Generate d2 uniform Y columns");
  sim_cmd->add_option("--d3", d3, "Generate d3 uniform V columns");
  std::string cov_law = "uniform01";
  sim_cmd->add_option("--cov-law", cov_law,
                      "Law for generated covariates: uniform01 or uniform_pm1")
      ->check(CLI::IsMember({"uniform01", "uniform_pm1"}));
  sim_cmd->add_option("--node-cov", sim_node_cov, "Node covariate file");
  sim_cmd->add_option("--dyad-cov", sim_dyad_cov, "Dyad covariate file");
  sim_cmd->add_option("--x-cols", sim_x_cols, "X columns in --node-cov");
  sim_cmd->add_option("--y-cols", sim_y_cols, "Y columns in --node-cov");
  sim_cmd->add_option("--seed", sim_seed, "Random seed")->required();
  sim_cmd->add_option("--out", sim_out, "Edge list output path")->required();
  sim_cmd->add_option("--manifest", manifest_path,
                      "Manifest path (default <out>.manifest.json)");
  sim_cmd->add_option("--cov-prefix", cov_prefix,
                      "Write generated covariates to <prefix>_nodes.csv / "
                      "<prefix>_dyads.csv");
  sim_cmd->add_option("--delim", sim_delim, "Output delimiter");

  // ---- experiments ----
  std::string config_path, out_prefix;
  std::uint64_t exp_seed = 0;
  int exp_workers = 0;
  bool exp_seed_set = false;
  for (const char* kind : {"coverage", "qq", "phase"}) {
    auto* cmd = app.add_subcommand(
        kind, std::string("Run the ") + kind + " experiment");
    cmd->add_option("--config", config_path, "Experiment config file")
        ->required();
    cmd->add_option("--out", out_prefix, "Output file prefix");
    cmd->add_option("--seed", exp_seed, "Override the config seed")
        ->each([&](const std::string&) { exp_seed_set = true; });
    cmd->add_option("--workers", exp_workers, "Override worker count");
  }

  // ---- census ----
  auto* census_cmd =
      app.add_subcommand("census", "Dyad census of an edge list");
  CommonGraphArgs census_args;
  add_graph_options(census_cmd, census_args);
  std::string census_out;
  census_cmd->add_option("--out", census_out, "Write a JSON census here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (fit_cmd->parsed()) {
    GraphHandle graph;
    recip_status status = load_graph(fit_graph_args, graph);
    if (status != RECIP_OK) return fail(status);

    FitHandle fit;
    if (model == "p15") {
      if (node_cov.empty()) {
        std::fprintf(stderr,
                     "error: --model p15 requires --node-cov (and usually "
                     "--dyad-cov)\n");
        return 1;
      }
      CovHandle cov;
      status = recip_covariates_load(
          graph.get(), node_cov.c_str(),
          dyad_cov.empty() ? nullptr : dyad_cov.c_str(), x_cols.c_str(),
          y_cols.c_str(), fit_graph_args.delim.empty() ? ',' : fit_graph_args.delim[0],
          center ? 1 : 0, nodes_from_cov ? 1 : 0, cov.out());
      if (status != RECIP_OK) return fail(status);

      double min_eig = 0.0;
      int warning = 0;
      recip_covariates_conditioning(cov.get(), graph.get(), 0.0, &min_eig,
                                    &warning);
      if (warning && !quiet)
        std::fprintf(stderr,
                     "warning: covariate covariance is near-singular "
                     "(min eigenvalue %.3g); some coordinates may not be "
                     "identified\n",
                     min_eig);

      recip_fit_options options;
      recip_fit_options_init(&options);
      options.tol = tol;
      options.max_iter = max_iter;
      options.level = level;
      options.workers = workers;
      status = recip_fit_p15(graph.get(), cov.get(), &options, fit.out());
    } else {
      status = recip_fit_br(graph.get(), level, fit.out());
    }
    if (status != RECIP_OK) return fail(status);

    if (!quiet) {
      std::printf("model %s: n=%" PRId64 ", edges=%" PRId64 "\n", model.c_str(),
                  recip_graph_node_count(graph.get()),
                  recip_graph_edge_count(graph.get()));
      print_fit_table(fit.get(), level);
    }
    if (!out_path.empty()) {
      std::string body;
      if (format == "csv") {
        body = fit_csv(fit.get());
      } else {
        CStr text;
        status = recip_fit_json(fit.get(), &text.ptr);
        if (status != RECIP_OK) return fail(status);
        body = text.ptr;
      }
      if (!write_text(out_path, body)) {
        std::fprintf(stderr, "error: cannot write %s\n", out_path.c_str());
        return 1;
      }
      if (!quiet) std::printf("wrote %s\n", out_path.c_str());
    }
    return 0;
  }

  if (sim_cmd->parsed()) {
    const char delim = sim_delim.empty() ? ',' : sim_delim[0];
    GraphHandle graph;
    CovHandle cov;
    recip_status status = RECIP_OK;
    std::string nodes_path, dyads_path;

    if (sim_model == "br") {
      status = recip_simulate_br(sim_n, sim_a, sim_b, sim_mu, sim_tau,
                                 sim_seed, graph.out());
    } else {
      if (!sim_node_cov.empty()) {
        GraphHandle empty;
        status = recip_graph_create(0, empty.out());
        if (status != RECIP_OK) return fail(status);
        status = recip_covariates_load(
            empty.get(), sim_node_cov.c_str(),
            sim_dyad_cov.empty() ? nullptr : sim_dyad_cov.c_str(),
            sim_x_cols.c_str(), sim_y_cols.c_str(), delim, 0, 1, cov.out());
        if (status != RECIP_OK) return fail(status);
        if (recip_graph_node_count(empty.get()) != sim_n) {
          std::fprintf(stderr,
                       "error: --n (%" PRId64 ") does not match the covariate "
                       "file (%" PRId64 " nodes)\n",
                       sim_n, recip_graph_node_count(empty.get()));
          return 1;
        }
        nodes_path = sim_node_cov;
        dyads_path = sim_dyad_cov;
      } else {
        d1 = d1 > 0 ? d1 : static_cast<int>(gamma1.size());
        d2 = d2 > 0 ? d2 : static_cast<int>(gamma2.size());
        d3 = d3 > 0 ? d3 : static_cast<int>(delta.size());
        const double lo = cov_law == "uniform_pm1" ? -1.0 : 0.0;
        status = recip_covariates_uniform_range(sim_n, d1, d2, d3, sim_seed,
                                                lo, 1.0, cov.out());
        if (status != RECIP_OK) return fail(status);
      }
      if (gamma1.size() != std::size_t(recip_covariates_d1(cov.get())) ||
          gamma2.size() != std::size_t(recip_covariates_d2(cov.get())) ||
          delta.size() != std::size_t(recip_covariates_d3(cov.get()))) {
        std::fprintf(stderr,
                     "error: gamma1/gamma2/delta lengths must match the "
                     "covariate dimensions (%d, %d, %d)\n",
                     recip_covariates_d1(cov.get()),
                     recip_covariates_d2(cov.get()),
                     recip_covariates_d3(cov.get()));
        return 1;
      }
      status = recip_simulate_p15(sim_n, sim_a, sim_b, sim_mu, sim_tau,
                                  gamma1.data(), static_cast<int>(gamma1.size()),
                                  gamma2.data(), static_cast<int>(gamma2.size()),
                                  delta.data(), static_cast<int>(delta.size()),
                                  cov.get(), sim_seed, graph.out());
    }
    if (status != RECIP_OK) return fail(status);

    status = recip_graph_write_edge_list(graph.get(), sim_out.c_str(), delim);
    if (status != RECIP_OK) return fail(status);

    if (sim_model == "p15" && sim_node_cov.empty() && !cov_prefix.empty()) {
      nodes_path = cov_prefix + "_nodes.csv";
      dyads_path = recip_covariates_d3(cov.get()) > 0
                       ? cov_prefix + "_dyads.csv"
                       : std::string();
      status = recip_covariates_write(
          cov.get(), graph.get(), nodes_path.c_str(),
          dyads_path.empty() ? nullptr : dyads_path.c_str(), delim);
      if (status != RECIP_OK) return fail(status);
    }

    int64_t d_null = 0, d_asym = 0, d_mut = 0;
    recip_graph_census(graph.get(), &d_null, &d_asym, &d_mut);
    json manifest = {
        {"model", sim_model},
        {"n", sim_n},
        {"a", sim_a},
        {"b", sim_b},
        {"mu", sim_mu},
        {"tau", sim_tau},
        {"seed", sim_seed},
        {"census",
         {{"null", d_null}, {"asymmetric", d_asym}, {"mutual", d_mut}}},
        {"edges", recip_graph_edge_count(graph.get())},
        {"files", {{"edges", sim_out}}},
    };
    if (sim_model == "p15") {
      manifest["gamma1"] = gamma1;
      manifest["gamma2"] = gamma2;
      manifest["delta"] = delta;
      if (!nodes_path.empty()) manifest["files"]["nodes"] = nodes_path;
      if (!dyads_path.empty()) manifest["files"]["dyads"] = dyads_path;
    }
    const std::string mpath =
        manifest_path.empty() ? sim_out + ".manifest.json" : manifest_path;
    if (!write_text(mpath, manifest.dump(2) + "\n")) {
      std::fprintf(stderr, "error: cannot write %s\n", mpath.c_str());
      return 1;
    }
    std::printf("wrote %s (%" PRId64 " edges; census %" PRId64 "/%" PRId64
                "/%" PRId64 ") and %s\n",
                sim_out.c_str(), recip_graph_edge_count(graph.get()), d_null,
                d_asym, d_mut, mpath.c_str());
    return 0;
  }

  for (const char* kind : {"coverage", "qq", "phase"}) {
    if (app.get_subcommand(kind)->parsed())
      return run_experiment(kind, config_path, out_prefix, exp_seed_set,
                            exp_seed, exp_workers);
  }

  if (census_cmd->parsed()) {
    GraphHandle graph;
    recip_status status = load_graph(census_args, graph);
    if (status != RECIP_OK) return fail(status);
    int64_t d_null = 0, d_asym = 0, d_mut = 0;
    recip_graph_census(graph.get(), &d_null, &d_asym, &d_mut);
    std::printf("n=%" PRId64 " edges=%" PRId64 " null=%" PRId64
                " asymmetric=%" PRId64 " mutual=%" PRId64 "\n",
                recip_graph_node_count(graph.get()),
                recip_graph_edge_count(graph.get()), d_null, d_asym, d_mut);
    if (!census_out.empty()) {
      const json doc = {{"n", recip_graph_node_count(graph.get())},
                        {"edges", recip_graph_edge_count(graph.get())},
                        {"census",
                         {{"null", d_null},
                          {"asymmetric", d_asym},
                          {"mutual", d_mut}}}};
      if (!write_text(census_out, doc.dump(2) + "\n")) {
        std::fprintf(stderr, "error: cannot write %s\n", census_out.c_str());
        return 1;
      }
    }
    return 0;
  }

  return 1;
}
