// Drives the installed CLI binary end to end. RECIP_CLI_PATH comes from the
// build system.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const std::string kCli = RECIP_CLI_PATH;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("recip_cli_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

int run(const std::string& args, const std::string& stdout_path = "") {
  std::string cmd = kCli + " " + args;
  if (!stdout_path.empty()) cmd += " > " + stdout_path + " 2>/dev/null";
  else cmd += " > /dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WEXITSTATUS(raw);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
}

}  // namespace

TEST_CASE("census subcommand") {
  TempDir dir;
  write_file(dir.file("toy.csv"), "a,b\nb,a\na,c\n");
  const std::string out = dir.file("census.txt");
  CHECK(run("census --edges " + dir.file("toy.csv"), out) == 0);
  const std::string text = slurp(out);
  CHECK(text.find("null=1") != std::string::npos);
  CHECK(text.find("asymmetric=1") != std::string::npos);
  CHECK(text.find("mutual=1") != std::string::npos);

  CHECK(run("census --edges " + dir.file("toy.csv") + " --out " +
            dir.file("census.json")) == 0);
  const json doc = json::parse(slurp(dir.file("census.json")));
  CHECK(doc["census"]["mutual"] == 1);
}

TEST_CASE("fit br on the toy graph") {
  TempDir dir;
  write_file(dir.file("toy.csv"), "a,b\nb,a\na,c\n");
  const std::string out_json = dir.file("fit.json");
  CHECK(run("fit --edges " + dir.file("toy.csv") + " --model br --out " +
            out_json + " --quiet") == 0);
  const json fit = json::parse(slurp(out_json));
  CHECK(fit["model"] == "br");
  CHECK(fit["coordinates"][0]["name"] == "mu_n");
  CHECK(std::abs(fit["coordinates"][0]["estimate"].get<double>() -
                 std::log(0.5)) < 1e-9);
  CHECK(std::abs(fit["coordinates"][2]["estimate"].get<double>() -
                 2.0 * std::log(2.0)) < 1e-9);

  // JSON round trip: parse(dump(parse(x))) == parse(x), numbers intact.
  const json again = json::parse(fit.dump());
  CHECK(again == fit);
  CHECK(again["coordinates"][0]["estimate"].get<double>() ==
        fit["coordinates"][0]["estimate"].get<double>());

  // --level uses the exact normal quantile: a 50% interval is narrower by
  // the quantile ratio 0.6745/1.95996.
  const std::string out_50 = dir.file("fit50.json");
  CHECK(run("fit --edges " + dir.file("toy.csv") + " --model br --level 0.5 "
            "--out " + out_50 + " --quiet") == 0);
  const json fit50 = json::parse(slurp(out_50));
  const double w95 = fit["coordinates"][0]["ci"][1].get<double>() -
                     fit["coordinates"][0]["ci"][0].get<double>();
  const double w50 = fit50["coordinates"][0]["ci"][1].get<double>() -
                     fit50["coordinates"][0]["ci"][0].get<double>();
  CHECK(std::abs(w50 / w95 - 0.674489750196082 / 1.959963984540054) < 1e-9);
}

TEST_CASE("fit exit codes: model errors give 2, validation gives 1") {
  TempDir dir;
  write_file(dir.file("nomutual.csv"), "a,b\nb,c\n");
  CHECK(run("fit --edges " + dir.file("nomutual.csv") + " --model br") == 2);
  CHECK(run("fit --edges " + dir.file("missing_file.csv")) == 1);
  // p15 without covariates
  write_file(dir.file("toy.csv"), "a,b\nb,a\na,c\n");
  CHECK(run("fit --edges " + dir.file("toy.csv") + " --model p15") == 1);
  // unknown flag rejected
  CHECK(run("fit --edges " + dir.file("toy.csv") + " --bogus") == 1);
  CHECK(run("frobnicate") == 1);
}

TEST_CASE("simulate: determinism, manifest, validation") {
  TempDir dir;
  const std::string out1 = dir.file("sim1.csv"), out2 = dir.file("sim2.csv");
  const std::string base = "simulate --model br --n 80 --a 0.5 --b 0.5 "
                           "--mu 0.2 --tau 0.5 --seed 31 --out ";
  CHECK(run(base + out1) == 0);
  CHECK(run(base + out2) == 0);
  CHECK(slurp(out1) == slurp(out2));  // byte-identical

  const json manifest = json::parse(slurp(out1 + ".manifest.json"));
  CHECK(manifest["n"] == 80);
  CHECK(manifest["seed"] == 31);
  CHECK(manifest["census"].contains("mutual"));

  CHECK(run("simulate --model br --n 80 --a 2.5 --b 0.5 --mu 0 --tau 0 "
            "--seed 1 --out " +
            dir.file("bad.csv")) == 1);
}

TEST_CASE("simulate p15, refit from the written files") {
  TempDir dir;
  const std::string edges = dir.file("p15.csv");
  CHECK(run("simulate --model p15 --n 150 --a 0.5 --b 0.5 --mu 0.2 --tau 0.5 "
            "--gamma1 0.2 --gamma2 0.4 --delta 0.3 --seed 99 --out " +
            edges + " --cov-prefix " + dir.file("cov")) == 0);
  const json manifest = json::parse(slurp(edges + ".manifest.json"));
  const std::int64_t n = manifest["n"].get<std::int64_t>();
  CHECK(n == 150);
  CHECK(fs::exists(dir.file("cov_nodes.csv")));
  CHECK(fs::exists(dir.file("cov_dyads.csv")));

  const std::string fit_json = dir.file("refit.json");
  CHECK(run("fit --model p15 --edges " + edges + " --n-nodes " +
            std::to_string(n) + " --node-cov " + dir.file("cov_nodes.csv") +
            " --dyad-cov " + dir.file("cov_dyads.csv") +
            " --x-cols x1 --y-cols y1 --out " + fit_json + " --quiet") == 0);
  const json fit = json::parse(slurp(fit_json));
  CHECK(fit["converged"] == true);
  // Fitted mu_n within 4 Ses of the generating value (simulate/fit round trip).
  const double mu_n0 = -0.5 * std::log(double(n)) + 0.2;
  const auto& mu_row = fit["coordinates"][0];
  CHECK(mu_row["name"] == "mu_n");
  const double se = mu_row["se"].get<double>();
  CHECK(std::abs(mu_row["estimate"].get<double>() - mu_n0) < 4.0 * se);
  // All five coordinates plus rho_n are reported.
  CHECK(fit["coordinates"].size() == 6);
}

TEST_CASE("simulate p15 from covariate files keeps labels aligned") {
  TempDir dir;
  write_file(dir.file("nodes.csv"),
             "node,x1,y1\nu,0.2,0.9\nv,0.4,0.1\nw,0.8,0.5\nz,0.1,0.3\n");
  write_file(dir.file("dyads.csv"),
             "node_a,node_b,v1\nu,v,0.5\nu,w,0.2\nu,z,0.9\nv,w,0.4\n"
             "v,z,0.6\nw,z,0.1\n");
  CHECK(run("simulate --model p15 --n 4 --a 0.5 --b 0.5 --mu 2 --tau 2 "
            "--gamma1 0.2 --gamma2 0.4 --delta 0.3 --seed 5 "
            "--node-cov " + dir.file("nodes.csv") +
            " --dyad-cov " + dir.file("dyads.csv") +
            " --x-cols x1 --y-cols y1 --out " + dir.file("out.csv")) == 0);
  const json manifest = json::parse(slurp(dir.file("out.csv.manifest.json")));
  CHECK(manifest["n"] == 4);
  // Node-count mismatch is a validation error.
  CHECK(run("simulate --model p15 --n 9 --a 0.5 --b 0.5 --mu 0 --tau 0 "
            "--gamma1 0.2 --gamma2 0.4 --delta 0.3 --seed 5 "
            "--node-cov " + dir.file("nodes.csv") +
            " --dyad-cov " + dir.file("dyads.csv") +
            " --x-cols x1 --y-cols y1 --out " + dir.file("out2.csv")) == 1);
}

TEST_CASE("fit propagates convergence failures as exit 2") {
  TempDir dir;
  CHECK(run("simulate --model p15 --n 60 --a 0.5 --b 0.5 --mu 0.2 --tau 0.5 "
            "--gamma1 0.2 --gamma2 0.4 --delta 0.3 --seed 12 --out " +
            dir.file("g.csv") + " --cov-prefix " + dir.file("cov")) == 0);
  CHECK(run("fit --model p15 --edges " + dir.file("g.csv") + " --n-nodes 60 "
            "--node-cov " + dir.file("cov_nodes.csv") + " --dyad-cov " +
            dir.file("cov_dyads.csv") + " --x-cols x1 --y-cols y1 "
            "--max-iter 1 --quiet") == 2);
}

TEST_CASE("experiment subcommands write reports") {
  TempDir dir;
  write_file(dir.file("cov.conf"),
             "model = br\nn = 60\na = 0.5\nb = 0.5\nmu = 0.2\ntau = 0.5\n"
             "replicates = 12\nseed = 4\nworkers = 1\n");
  CHECK(run("coverage --config " + dir.file("cov.conf") + " --out " +
            dir.file("cov")) == 0);
  CHECK(fs::exists(dir.file("cov.csv")));
  CHECK(fs::exists(dir.file("cov.json")));
  const std::string csv = slurp(dir.file("cov.csv"));
  CHECK(csv.rfind("coordinate,truth,coverage,", 0) == 0);
  const json report = json::parse(slurp(dir.file("cov.json")));
  CHECK(report["used"].get<int>() + report["failures"]["nonexistent"].get<int>() +
            report["failures"]["nonconverged"].get<int>() ==
        12);

  // Seed override changes the report; repeating the override reproduces it.
  CHECK(run("coverage --config " + dir.file("cov.conf") + " --seed 77 --out " +
            dir.file("cov77")) == 0);
  CHECK(run("coverage --config " + dir.file("cov.conf") + " --seed 77 --out " +
            dir.file("cov77b")) == 0);
  CHECK(slurp(dir.file("cov77.csv")) == slurp(dir.file("cov77b.csv")));
  CHECK(slurp(dir.file("cov77.csv")) != slurp(dir.file("cov.csv")));

  // qq with a single replicate: header + one data row.
  write_file(dir.file("qq.conf"),
             "model = br\nn = 60\na = 0.5\nb = 0.5\nmu = 0.2\ntau = 0.5\n"
             "replicates = 1\nseed = 4\nworkers = 1\n");
  CHECK(run("qq --config " + dir.file("qq.conf") + " --out " +
            dir.file("qq")) == 0);
  const std::string std_csv = slurp(dir.file("qq_standardized.csv"));
  CHECK(std::count(std_csv.begin(), std_csv.end(), '\n') <= 2);
  CHECK(fs::exists(dir.file("qq_quantiles.csv")));
  CHECK(fs::exists(dir.file("qq.json")));

  write_file(dir.file("phase.conf"),
             "model = br\nn = 60\nmu = 0.2\ntau = 0.5\nreplicates = 10\n"
             "seed = 4\ncells = 0.5:1.0, 0.75:0.75, 1.0:0.5\nworkers = 1\n");
  CHECK(run("phase --config " + dir.file("phase.conf") + " --out " +
            dir.file("phase")) == 0);
  const std::string phase_csv = slurp(dir.file("phase.csv"));
  CHECK(std::count(phase_csv.begin(), phase_csv.end(), '\n') == 4);

  // Config schema violation: exit 1.
  write_file(dir.file("bad.conf"), "model = br\nwhat = 1\n");
  CHECK(run("coverage --config " + dir.file("bad.conf")) == 1);
}
