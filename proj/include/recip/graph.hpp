#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace recip {

// Counts of the three dyad configuration classes: (0,0), exactly one link,
// (1,1). Together they partition all n(n-1)/2 unordered pairs.
struct DyadCensus {
  std::int64_t n = 0;
  std::int64_t d_null = 0;
  std::int64_t d_asym = 0;
  std::int64_t d_mut = 0;

  // Total dyads; equals n(n-1)/2 for a census taken from a graph.
  std::int64_t dyads() const { return d_null + d_asym + d_mut; }
};

// Simple directed graph on nodes 0..n-1, no self-loops. Adjacency is a hash
// set keyed by the ordered pair, so storage is proportional to the edge
// count. External labels are kept in a dictionary; synthetic graphs use the
// decimal index as label. Read-only after construction is thread-safe.
class DirectedGraph {
 public:
  explicit DirectedGraph(std::int64_t n);

  std::int64_t node_count() const { return n_; }
  std::int64_t edge_count() const {
    return static_cast<std::int64_t>(edges_.size());
  }

  bool has_edge(std::int64_t from, std::int64_t to) const {
    return edges_.count(key(from, to)) != 0;
  }

  // Idempotent; rejects self-loops and out-of-range endpoints.
  void add_edge(std::int64_t from, std::int64_t to);

  // Appends a node; label must be fresh. Returns the new index.
  std::int64_t add_node(const std::string& label);

  const std::string& label(std::int64_t index) const {
    return labels_[static_cast<std::size_t>(index)];
  }
  std::optional<std::int64_t> index_of(const std::string& label) const;

  // Edges sorted by (from, to); the canonical order for serialization.
  std::vector<std::pair<std::int64_t, std::int64_t>> sorted_edges() const;

 private:
  static std::uint64_t key(std::int64_t i, std::int64_t j) {
    return (static_cast<std::uint64_t>(i) << 32) |
           static_cast<std::uint64_t>(j);
  }

  std::int64_t n_ = 0;
  std::unordered_set<std::uint64_t> edges_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::int64_t> index_;
};

// Tallies every unordered pair into its configuration class. O(edges).
DyadCensus dyad_census(const DirectedGraph& g);

struct EdgeListOptions {
  char delimiter = ',';
  bool skip_header = false;
  // When > 0, labels must be integers in [0, n_nodes) and the graph gets
  // exactly n_nodes nodes; indices missing from the file become isolated
  // nodes. The edge-list format cannot otherwise represent them.
  std::int64_t n_nodes = 0;
};

// Reads `source<delim>target` records. Duplicate rows collapse to one edge;
// self-loops and malformed rows are reported with their line number.
DirectedGraph load_edge_list(const std::string& path,
                             const EdgeListOptions& options = {});

void write_edge_list(const DirectedGraph& g, const std::string& path,
                     char delimiter = ',');

// Dense index of the unordered pair (i, j), i < j, in row-major upper
// triangle order; the canonical dyad enumeration used everywhere.
inline std::int64_t pair_index(std::int64_t n, std::int64_t i,
                               std::int64_t j) {
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

// Inverse of pair_index.
std::pair<std::int64_t, std::int64_t> pair_from_index(std::int64_t n,
                                                      std::int64_t k);

}  // namespace recip
