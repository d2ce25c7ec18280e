#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <string>

#include "recip/errors.hpp"
#include "recip/mc_lab.hpp"

using namespace recip;

namespace {

const char* kP15Config =
    "# Table-style design, shrunk for tests\n"
    "model = p15\n"
    "n = 60\n"
    "a = 0.5\n"
    "b = 0.5\n"
    "mu = 0.2\n"
    "tau = 0.5\n"
    "gamma1 = 0.2\n"
    "gamma2 = 0.4\n"
    "delta = 0.3\n"
    "replicates = 20\n"
    "seed = 42\n"
    "workers = 1\n";

}  // namespace

TEST_CASE("config parsing: full round trip of keys") {
  const ExperimentConfig config = ExperimentConfig::parse(kP15Config);
  CHECK(config.model == ModelKind::kP15);
  CHECK(config.n == 60);
  CHECK(config.a == 0.5);
  CHECK(config.mu0 == 0.2);
  CHECK(config.tau0 == 0.5);
  CHECK(config.gamma1.size() == 1);
  CHECK(config.gamma1(0) == 0.2);
  CHECK(config.replicates == 20);
  CHECK(config.seed == 42);
  CHECK(config.rho0() == doctest::Approx(0.1));
}

TEST_CASE("config parsing: errors") {
  CHECK_THROWS_AS(ExperimentConfig::parse("model = p3\n"), Error);
  CHECK_THROWS_AS(ExperimentConfig::parse("banana = 1\n"), Error);
  CHECK_THROWS_AS(ExperimentConfig::parse("n\n"), Error);
  CHECK_THROWS_AS(ExperimentConfig::parse("n = 1\n"), Error);
  CHECK_THROWS_AS(ExperimentConfig::parse("a = 2.5\n"), Error);
  CHECK_THROWS_AS(ExperimentConfig::parse("cells = 0.5-1.0\n"), Error);
  CHECK_THROWS_AS(ExperimentConfig::parse("n = 5\nn = 6\n"), Error);
  // br with covariate parameters is contradictory
  CHECK_THROWS_AS(ExperimentConfig::parse("model = br\ngamma1 = 0.2\n"),
                  Error);
}

TEST_CASE("config parsing: covariate law") {
  CHECK(ExperimentConfig::parse("model = br\n").law ==
        CovariateLaw::kUniform01);
  CHECK(ExperimentConfig::parse("covariate_law = uniform_pm1\n").law ==
        CovariateLaw::kUniformPm1);
  CHECK_THROWS_AS(ExperimentConfig::parse("covariate_law = gaussian\n"),
                  Error);
}

TEST_CASE("uniform covariate law ranges") {
  const CovariateSet c01 = CovariateSet::uniform(40, 1, 1, 1, 5);
  CHECK(c01.x().minCoeff() >= 0.0);
  CHECK(c01.x().maxCoeff() < 1.0);
  const CovariateSet cpm = CovariateSet::uniform(40, 1, 1, 1, 5, -1.0, 1.0);
  CHECK(cpm.x().minCoeff() < 0.0);
  CHECK(cpm.x().minCoeff() >= -1.0);
  CHECK(cpm.x().maxCoeff() < 1.0);
  // Same seed: the pm1 draw is the affine image of the 01 draw.
  CHECK(cpm.x()(3, 0) == doctest::Approx(2.0 * c01.x()(3, 0) - 1.0));
}

TEST_CASE("config parsing: phase cells") {
  const ExperimentConfig config = ExperimentConfig::parse(
      "model = br\ncells = 0.5:1.0, 0.75:0.75, 1.0:0.5\nreplicates = 5\n");
  REQUIRE(config.cells.size() == 3);
  CHECK(config.cells[0] == std::pair<double, double>{0.5, 1.0});
  CHECK(config.cells[2] == std::pair<double, double>{1.0, 0.5});
}

TEST_CASE("coverage: R=1 is a degenerate aggregate") {
  ExperimentConfig config = ExperimentConfig::parse(kP15Config);
  config.replicates = 1;
  const CoverageReport report = run_coverage(config);
  CHECK(report.used + report.failures_nonexistent +
            report.failures_nonconverged ==
        1);
  if (report.used == 1) {
    for (const auto& c : report.coords) {
      const bool zero_or_one = c.coverage == 0.0 || c.coverage == 1.0;
      CHECK(zero_or_one);
      CHECK(c.median_width > 0.0);
    }
  }
}

TEST_CASE("coverage: small br run behaves sanely") {
  const ExperimentConfig config = ExperimentConfig::parse(
      "model = br\nn = 100\na = 0.5\nb = 0.5\nmu = 0.2\ntau = 0.5\n"
      "replicates = 60\nseed = 7\nworkers = 2\n");
  const CoverageReport report = run_coverage(config);
  CHECK(report.used == 60);
  REQUIRE(report.coords.size() == 3);
  CHECK(report.coords[0].name == "mu_n");
  CHECK(report.coords[2].name == "rho_n");
  for (const auto& c : report.coords) {
    CHECK(c.coverage > 0.8);  // loose: 60 replicates of a 95% mechanism
    CHECK(c.coverage <= 1.0);
    CHECK(c.band_lo < 0.95);
    CHECK(c.band_hi > 0.95);
  }
  // Truth at the n-dependent level.
  CHECK(report.coords[0].truth ==
        doctest::Approx(-0.5 * std::log(100.0) + 0.2));
}

TEST_CASE("coverage and qq reports are deterministic across worker counts") {
  ExperimentConfig config = ExperimentConfig::parse(kP15Config);
  config.replicates = 8;
  config.workers = 1;
  const CoverageReport r1 = run_coverage(config);
  config.workers = 4;
  const CoverageReport r4 = run_coverage(config);
  CHECK(r1.to_csv() == r4.to_csv());

  auto strip_wall = [](const std::string& text) {
    auto j = nlohmann::json::parse(text);
    j.erase("wall_seconds");
    return j;
  };
  CHECK(strip_wall(r1.to_json()) == strip_wall(r4.to_json()));

  const QqReport q1 = run_qq(config);
  config.workers = 1;
  const QqReport q2 = run_qq(config);
  CHECK(q1.standardized_csv() == q2.standardized_csv());
  CHECK(q1.quantiles_csv() == q2.quantiles_csv());
}

TEST_CASE("qq: shape and column names") {
  ExperimentConfig config = ExperimentConfig::parse(kP15Config);
  config.replicates = 6;
  const QqReport report = run_qq(config);
  CHECK(report.names.size() == 5);  // mu, tau, gamma1, gamma2, delta
  CHECK(report.standardized.cols() == 5);
  CHECK(report.standardized.rows() + report.failures_nonexistent +
            report.failures_nonconverged ==
        6);
  // One quantile row per used replicate per coordinate (plus header).
  const std::string q = report.quantiles_csv();
  const auto lines = std::count(q.begin(), q.end(), '\n');
  CHECK(lines == 1 + report.standardized.rows() * 5);
}

TEST_CASE("covariate redraw vs fixed changes the replicate stream") {
  ExperimentConfig config = ExperimentConfig::parse(kP15Config);
  config.replicates = 5;
  const QqReport redraw = run_qq(config);
  config.covariates = CovariateMode::kFixed;
  const QqReport fixed = run_qq(config);
  CHECK(redraw.standardized_csv() != fixed.standardized_csv());
}

TEST_CASE("phase: regimes, expected variances, and reuse of (a, b)") {
  const ExperimentConfig config = ExperimentConfig::parse(
      "model = br\nn = 80\nmu = 0.2\ntau = 0.5\nreplicates = 40\nseed = 3\n"
      "cells = 0.4:0.8, 0.6:0.6, 0.8:0.4\nworkers = 2\n");
  const PhaseReport report = run_phase_transition(config);
  REQUIRE(report.cells.size() == 3);
  CHECK(report.cells[0].regime == "a<b");
  CHECK(report.cells[1].regime == "a=b");
  CHECK(report.cells[2].regime == "a>b");
  const double e_mu = std::exp(-0.2), e_tau = std::exp(-0.5);
  CHECK(report.cells[0].var_rho_expected == doctest::Approx(2.0 * e_tau));
  CHECK(report.cells[1].var_rho_expected ==
        doctest::Approx(2.0 * e_tau + 4.0 * e_mu));
  CHECK(report.cells[2].var_rho_expected == doctest::Approx(4.0 * e_mu));
  for (const auto& cell : report.cells) {
    CHECK(cell.var_tau_expected == doctest::Approx(2.0 * e_tau));
    CHECK(cell.used + cell.failures == 40);
    if (cell.used >= 2) {
      CHECK(std::isfinite(cell.corr_mu_rho));
      CHECK(cell.var_tau_scaled > 0.0);
    }
  }
  CHECK(report.rho0 == doctest::Approx(0.1));

  // Without cells the config's own (a, b) forms a single cell.
  const ExperimentConfig single = ExperimentConfig::parse(
      "model = br\nn = 60\na = 0.5\nb = 0.5\nmu = 0.2\ntau = 0.5\n"
      "replicates = 10\nseed = 3\nworkers = 1\n");
  CHECK(run_phase_transition(single).cells.size() == 1);
}

TEST_CASE("phase requires the br model") {
  ExperimentConfig config = ExperimentConfig::parse(kP15Config);
  CHECK_THROWS_AS(run_phase_transition(config), Error);
}

TEST_CASE("csv reports parse as csv and exclude wall clock") {
  ExperimentConfig config = ExperimentConfig::parse(kP15Config);
  config.replicates = 3;
  const CoverageReport report = run_coverage(config);
  const std::string csv = report.to_csv();
  CHECK(csv.find("wall") == std::string::npos);
  CHECK(csv.rfind("coordinate,truth,coverage,", 0) == 0);
  const auto j = nlohmann::json::parse(report.to_json());
  CHECK(j.contains("wall_seconds"));
  CHECK(j["coordinates"].size() == report.coords.size());
}
