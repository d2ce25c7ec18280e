#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "recip/errors.hpp"
#include "recip/graph.hpp"

using namespace recip;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
}

}  // namespace

TEST_CASE("census of the empty graph on 3 nodes") {
  DirectedGraph g(3);
  const DyadCensus c = dyad_census(g);
  CHECK(c.d_null == 3);
  CHECK(c.d_asym == 0);
  CHECK(c.d_mut == 0);
}

TEST_CASE("census classifies mixed dyads") {
  // Edges 1->2, 2->1, 1->3 on nodes {0,1,2,3 minus node 0}: use n=3 with
  // labels 0,1,2 mapped to the textbook 1,2,3.
  DirectedGraph g(3);
  g.add_edge(0, 1);
  g.add_edge(1, 0);
  g.add_edge(0, 2);
  const DyadCensus c = dyad_census(g);
  CHECK(c.d_null == 1);
  CHECK(c.d_asym == 1);
  CHECK(c.d_mut == 1);
  CHECK(c.d_null + c.d_asym + c.d_mut == c.dyads());
}

TEST_CASE("census partitions all dyads and is invariant under relabeling") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::int64_t n = 2 + static_cast<std::int64_t>(rng() % 40);
    DirectedGraph g(n);
    const int edges = static_cast<int>(rng() % (2 * n));
    for (int e = 0; e < edges; ++e) {
      const std::int64_t i = static_cast<std::int64_t>(rng() % n);
      const std::int64_t j = static_cast<std::int64_t>(rng() % n);
      if (i != j) g.add_edge(i, j);
    }
    const DyadCensus c = dyad_census(g);
    CHECK(c.d_null + c.d_asym + c.d_mut == n * (n - 1) / 2);
    CHECK(c.d_null >= 0);
    CHECK(c.d_asym >= 0);
    CHECK(c.d_mut >= 0);

    // Relabel via a random permutation; the census must not change.
    std::vector<std::int64_t> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    DirectedGraph h(n);
    for (const auto& [u, v] : g.sorted_edges())
      h.add_edge(perm[std::size_t(u)], perm[std::size_t(v)]);
    const DyadCensus ch = dyad_census(h);
    CHECK(ch.d_null == c.d_null);
    CHECK(ch.d_asym == c.d_asym);
    CHECK(ch.d_mut == c.d_mut);
  }
}

TEST_CASE("self loops are rejected") {
  DirectedGraph g(2);
  CHECK_THROWS_AS(g.add_edge(1, 1), Error);
}

TEST_CASE("edge list: mutual pair") {
  const auto path = temp_file("recip_test_mutual.csv");
  write_file(path, "a,b\nb,a\n");
  const DirectedGraph g = load_edge_list(path.string());
  CHECK(g.node_count() == 2);
  const DyadCensus c = dyad_census(g);
  CHECK(c.d_mut == 1);
  CHECK(c.d_asym == 0);
  std::filesystem::remove(path);
}

TEST_CASE("edge list: duplicate rows collapse") {
  const auto path = temp_file("recip_test_dup.csv");
  write_file(path, "a,b\na,b\n");
  const DirectedGraph g = load_edge_list(path.string());
  CHECK(g.node_count() == 2);
  CHECK(g.edge_count() == 1);
  CHECK(g.has_edge(0, 1));
  std::filesystem::remove(path);
}

TEST_CASE("edge list: parse errors carry line numbers") {
  const auto path = temp_file("recip_test_bad.csv");
  write_file(path, "a,b\nc\n");
  try {
    load_edge_list(path.string());
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("edge list: self-loop row is a validation error") {
  const auto path = temp_file("recip_test_loop.csv");
  write_file(path, "a,b\nc,c\n");
  try {
    load_edge_list(path.string());
    FAIL("expected validation error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalid);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("edge list: CRLF, blank lines, header and custom delimiter") {
  const auto path = temp_file("recip_test_crlf.csv");
  write_file(path, "source;target\r\na;b\r\n\r\nb;c\r\n");
  EdgeListOptions options;
  options.delimiter = ';';
  options.skip_header = true;
  const DirectedGraph g = load_edge_list(path.string(), options);
  CHECK(g.node_count() == 3);
  CHECK(g.edge_count() == 2);
  std::filesystem::remove(path);
}

TEST_CASE("edge list: fixed node count keeps isolated nodes") {
  const auto path = temp_file("recip_test_fixed.csv");
  write_file(path, "0,2\n");
  EdgeListOptions options;
  options.n_nodes = 5;
  const DirectedGraph g = load_edge_list(path.string(), options);
  CHECK(g.node_count() == 5);
  CHECK(g.edge_count() == 1);
  CHECK(dyad_census(g).d_null == 9);

  write_file(path, "0,7\n");
  CHECK_THROWS_AS(load_edge_list(path.string(), options), Error);
  std::filesystem::remove(path);
}

TEST_CASE("write then load is the identity on the edge set") {
  std::mt19937_64 rng(99);
  DirectedGraph g(12);
  for (int e = 0; e < 30; ++e) {
    const std::int64_t i = static_cast<std::int64_t>(rng() % 12);
    const std::int64_t j = static_cast<std::int64_t>(rng() % 12);
    if (i != j) g.add_edge(i, j);
  }
  const auto path = temp_file("recip_test_roundtrip.csv");
  write_edge_list(g, path.string());
  EdgeListOptions options;
  options.n_nodes = 12;
  const DirectedGraph h = load_edge_list(path.string(), options);

  std::set<std::pair<std::string, std::string>> before, after;
  for (const auto& [u, v] : g.sorted_edges())
    before.emplace(g.label(u), g.label(v));
  for (const auto& [u, v] : h.sorted_edges())
    after.emplace(h.label(u), h.label(v));
  CHECK(before == after);
  std::filesystem::remove(path);
}

TEST_CASE("pair_index and pair_from_index are inverse") {
  for (std::int64_t n : {2, 3, 7, 50}) {
    std::int64_t k = 0;
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = i + 1; j < n; ++j, ++k) {
        CHECK(pair_index(n, i, j) == k);
        const auto [pi, pj] = pair_from_index(n, k);
        CHECK(pi == i);
        CHECK(pj == j);
      }
  }
}
