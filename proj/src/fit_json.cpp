#include "recip/fit_json.hpp"

#include <json.hpp>

#include "recip/numerics.hpp"

namespace recip {

using nlohmann::json;

std::string coordinate_group(const std::string& name) {
  if (name.rfind("gamma1:", 0) == 0) return "X";
  if (name.rfind("gamma2:", 0) == 0) return "Y";
  if (name.rfind("delta:", 0) == 0) return "V";
  return "";
}

std::string br_fit_json(const BrFit& fit, double level) {
  const double crit = normal_critical_value(level);
  const double est[3] = {fit.params.mu_n, fit.params.tau_n,
                         fit.params.rho_n()};
  const double se[3] = {fit.se.se_mu, fit.se.se_tau, fit.se.se_rho};
  const char* names[3] = {"mu_n", "tau_n", "rho_n"};

  json j;
  j["model"] = "br";
  j["n"] = fit.census.n;
  j["census"] = {{"null", fit.census.d_null},
                 {"asymmetric", fit.census.d_asym},
                 {"mutual", fit.census.d_mut}};
  j["nll"] = fit.nll;
  j["level"] = level;
  j["coordinates"] = json::array();
  for (int k = 0; k < 3; ++k) {
    j["coordinates"].push_back({{"name", names[k]},
                                {"group", ""},
                                {"estimate", est[k]},
                                {"se", se[k]},
                                {"z", est[k] / se[k]},
                                {"ci", {est[k] - crit * se[k],
                                        est[k] + crit * se[k]}}});
  }
  return j.dump(2) + "\n";
}

std::string p15_fit_json(const FitResult& fit) {
  json j;
  j["model"] = "p15";
  j["n"] = fit.n;
  j["nll"] = fit.nll;
  j["grad_norm"] = fit.grad_norm;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["inference_available"] = fit.inference.has_value();
  if (fit.inference) {
    j["level"] = fit.inference->level;
    j["hessian_condition_number"] = fit.inference->hessian_cond;
  }
  j["coordinates"] = json::array();
  const int dim = fit.theta.dim();
  for (int k = 0; k < dim; ++k) {
    json row = {{"name", fit.names[static_cast<std::size_t>(k)]},
                {"group", coordinate_group(fit.names[std::size_t(k)])},
                {"estimate", fit.theta.flat()(k)}};
    if (fit.inference) {
      row["se"] = fit.inference->se(k);
      row["z"] = fit.inference->z(k);
      row["ci"] = {fit.inference->ci_lo(k), fit.inference->ci_hi(k)};
    }
    j["coordinates"].push_back(std::move(row));
  }
  json rho = {{"name", "rho_n"},
              {"group", ""},
              {"estimate", fit.theta.rho_n()}};
  if (fit.inference) {
    rho["se"] = fit.inference->se_rho;
    rho["z"] = fit.inference->rho_z;
    rho["ci"] = {fit.inference->rho_ci_lo, fit.inference->rho_ci_hi};
  }
  j["coordinates"].push_back(std::move(rho));
  return j.dump(2) + "\n";
}

}  // namespace recip
