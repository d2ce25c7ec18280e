#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "recip/covariates.hpp"
#include "recip/errors.hpp"
#include "recip/rng.hpp"

using namespace recip;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
}

struct TempFiles {
  std::filesystem::path node = temp_file("recip_cov_nodes.csv");
  std::filesystem::path dyad = temp_file("recip_cov_dyads.csv");
  ~TempFiles() {
    std::error_code ec;
    std::filesystem::remove(node, ec);
    std::filesystem::remove(dyad, ec);
  }
};

}  // namespace

TEST_CASE("covariate loading aligns to graph indices") {
  TempFiles files;
  write_file(files.node,
             "node,age,seniority\n"
             "carol,30,1\n"
             "alice,40,2\n"
             "bob,50,3\n");
  write_file(files.dyad,
             "node_a,node_b,same_office\n"
             "alice,bob,1\n"
             "carol,alice,0\n"
             "bob,carol,1\n");
  DirectedGraph g(0);
  g.add_node("alice");
  g.add_node("bob");
  g.add_node("carol");
  const CovariateSet c =
      load_covariates(g, files.node.string(), files.dyad.string(), {"age"},
                      {"seniority"});
  CHECK(c.d1() == 1);
  CHECK(c.d2() == 1);
  CHECK(c.d3() == 1);
  CHECK(c.x()(0, 0) == 40.0);  // alice
  CHECK(c.x()(1, 0) == 50.0);  // bob
  CHECK(c.x()(2, 0) == 30.0);  // carol
  CHECK(c.y()(0, 0) == 2.0);
  CHECK(c.v_row(0, 1)(0) == 1.0);  // {alice,bob}
  CHECK(c.v_row(0, 2)(0) == 0.0);  // {alice,carol}, given as carol,alice
  CHECK(c.v_row(2, 1)(0) == 1.0);  // order-insensitive accessor
}

TEST_CASE("duplicated dyad rows must agree") {
  TempFiles files;
  write_file(files.node, "node,x\na,0\nb,0\n");
  write_file(files.dyad, "node_a,node_b,v\na,b,1\nb,a,2\n");
  DirectedGraph g(0);
  g.add_node("a");
  g.add_node("b");
  try {
    load_covariates(g, files.node.string(), files.dyad.string(), {"x"}, {});
    FAIL("expected symmetry violation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalid);
    CHECK(std::string(e.what()).find("V_ij") != std::string::npos);
  }

  // Consistent duplicates are fine.
  write_file(files.dyad, "node_a,node_b,v\na,b,2\nb,a,2\n");
  const CovariateSet c =
      load_covariates(g, files.node.string(), files.dyad.string(), {"x"}, {});
  CHECK(c.v_row(0, 1)(0) == 2.0);
}

TEST_CASE("missing dyad row is an error") {
  TempFiles files;
  write_file(files.node, "node,x\na,0\nb,0\nc,0\n");
  write_file(files.dyad, "node_a,node_b,v\na,b,1\na,c,1\n");
  DirectedGraph g(0);
  g.add_node("a");
  g.add_node("b");
  g.add_node("c");
  CHECK_THROWS_AS(
      load_covariates(g, files.node.string(), files.dyad.string(), {"x"}, {}),
      Error);
}

TEST_CASE("unknown node label is an error unless explicitly allowed") {
  TempFiles files;
  write_file(files.node, "node,x\na,0\nb,0\nzed,0\n");
  DirectedGraph g(0);
  g.add_node("a");
  g.add_node("b");
  CHECK_THROWS_AS(load_covariates(g, files.node.string(), "", {"x"}, {}),
                  Error);

  CovariateLoadOptions options;
  options.add_missing_nodes = true;
  DirectedGraph g2(0);
  g2.add_node("a");
  g2.add_node("b");
  const CovariateSet c =
      load_covariates(g2, files.node.string(), "", {"x"}, {}, options);
  CHECK(g2.node_count() == 3);
  CHECK(c.node_count() == 3);
}

TEST_CASE("missing required column and missing node row") {
  TempFiles files;
  write_file(files.node, "node,x\na,0\nb,0\n");
  DirectedGraph g(0);
  g.add_node("a");
  g.add_node("b");
  CHECK_THROWS_AS(load_covariates(g, files.node.string(), "", {"nope"}, {}),
                  Error);

  write_file(files.node, "node,x\na,0\n");
  CHECK_THROWS_AS(load_covariates(g, files.node.string(), "", {"x"}, {}),
                  Error);
}

TEST_CASE("multi-column dyad covariates with declared node roles") {
  // Shape of the lawyer-network ingestion: one X column, one Y column,
  // five same-attribute indicator columns on dyads.
  TempFiles files;
  write_file(files.node,
             "node,age,seniority\na,30,1\nb,40,2\nc,50,3\n");
  write_file(files.dyad,
             "node_a,node_b,same_status,same_office,same_practice,"
             "same_gender,same_school\n"
             "a,b,1,0,1,0,1\na,c,0,0,0,1,0\nb,c,1,1,0,0,0\n");
  DirectedGraph g(0);
  g.add_node("a");
  g.add_node("b");
  g.add_node("c");
  const CovariateSet c = load_covariates(g, files.node.string(),
                                         files.dyad.string(), {"age"},
                                         {"seniority"});
  CHECK(c.d1() == 1);
  CHECK(c.d2() == 1);
  CHECK(c.d3() == 5);
  CHECK(c.v_names()[0] == "same_status");
  CHECK(c.v_names()[4] == "same_school");
  CHECK(c.v_row(1, 2)(1) == 1.0);  // {b,c} same_office
}

TEST_CASE("center subtracts empirical means") {
  TempFiles files;
  write_file(files.node, "node,x,y\na,1,10\nb,3,20\n");
  DirectedGraph g(0);
  g.add_node("a");
  g.add_node("b");
  CovariateLoadOptions options;
  options.center = true;
  const CovariateSet c =
      load_covariates(g, files.node.string(), "", {"x"}, {"y"}, options);
  CHECK(c.x()(0, 0) == doctest::Approx(-1.0));
  CHECK(c.x()(1, 0) == doctest::Approx(1.0));
  CHECK(c.y().col(0).sum() == doctest::Approx(0.0));
}

TEST_CASE("conditioning: all-zero covariates are degenerate") {
  DirectedGraph g(6);
  const CovariateSet c = CovariateSet::zero(6, 1, 1, 1);
  const ConditioningReport report = check_covariate_conditioning(c, g);
  CHECK(report.min_eigenvalue == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(report.warning);
}

TEST_CASE("conditioning: iid uniform covariates are well conditioned") {
  const std::int64_t n = 200;
  DirectedGraph g(n);
  const CovariateSet c = CovariateSet::uniform(n, 1, 1, 1, 2024);
  const ConditioningReport report = check_covariate_conditioning(c, g);

  // Direct-summation oracle of the same covariance, independent code path.
  const std::int64_t dyads = n * (n - 1) / 2;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(3, 3);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = i + 1; j < n; ++j) {
      Eigen::Vector3d w(c.x()(i, 0) + c.x()(j, 0), c.y()(i, 0) + c.y()(j, 0),
                        c.v_row(i, j)(0));
      mean += w;
      second += w * w.transpose();
    }
  mean /= static_cast<double>(dyads);
  const Eigen::MatrixXd cov =
      second / static_cast<double>(dyads) - mean * mean.transpose();
  const double oracle_min =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov).eigenvalues().minCoeff();

  CHECK(report.min_eigenvalue == doctest::Approx(oracle_min).epsilon(1e-10));
  CHECK(report.min_eigenvalue > 0.0);
  CHECK_FALSE(report.warning);
}

TEST_CASE("conditioning: duplicated column is rank deficient") {
  const std::int64_t n = 40;
  DirectedGraph g(n);
  CovariateSet base = CovariateSet::uniform(n, 1, 1, 1, 7);
  Eigen::MatrixXd v(n * (n - 1) / 2, 2);
  v.col(0) = base.v().col(0);
  v.col(1) = base.v().col(0);  // exact copy
  const CovariateSet c(n, base.x(), base.y(), v);
  const ConditioningReport report = check_covariate_conditioning(c, g);
  CHECK(report.min_eigenvalue == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(report.warning);
}

TEST_CASE("non-finite covariates are rejected") {
  Eigen::MatrixXd x(2, 1);
  x << 1.0, std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(CovariateSet(2, x, Eigen::MatrixXd::Zero(2, 0),
                               Eigen::MatrixXd::Zero(1, 0)),
                  Error);
}

TEST_CASE("covariate write/load round trip") {
  TempFiles files;
  const std::int64_t n = 8;
  DirectedGraph g(n);
  const CovariateSet c = CovariateSet::uniform(n, 2, 1, 1, 5);
  write_covariates(c, g, files.node.string(), files.dyad.string());
  DirectedGraph g2(n);
  const CovariateSet c2 =
      load_covariates(g2, files.node.string(), files.dyad.string(),
                      {"x1", "x2"}, {"y1"});
  CHECK((c.x() - c2.x()).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK((c.y() - c2.y()).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK((c.v() - c2.v()).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}
