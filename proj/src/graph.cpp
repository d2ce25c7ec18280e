#include "recip/graph.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "recip/errors.hpp"

namespace recip {

DirectedGraph::DirectedGraph(std::int64_t n) : n_(n) {
  if (n < 0) throw Error(ErrorCode::kInvalid, "node count must be nonnegative");
  labels_.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    labels_.push_back(std::to_string(i));
    index_.emplace(labels_.back(), i);
  }
}

void DirectedGraph::add_edge(std::int64_t from, std::int64_t to) {
  if (from < 0 || from >= n_ || to < 0 || to >= n_)
    throw Error(ErrorCode::kInvalid, "edge endpoint out of range");
  if (from == to)
    throw Error(ErrorCode::kInvalid,
                "self-loop rejected: node " + labels_[std::size_t(from)]);
  edges_.insert(key(from, to));
}

std::int64_t DirectedGraph::add_node(const std::string& label) {
  if (index_.count(label))
    throw Error(ErrorCode::kInvalid, "duplicate node label: " + label);
  labels_.push_back(label);
  index_.emplace(label, n_);
  return n_++;
}

std::optional<std::int64_t> DirectedGraph::index_of(
    const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::pair<std::int64_t, std::int64_t>> DirectedGraph::sorted_edges()
    const {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  out.reserve(edges_.size());
  for (std::uint64_t k : edges_)
    out.emplace_back(static_cast<std::int64_t>(k >> 32),
                     static_cast<std::int64_t>(k & 0xffffffffull));
  std::sort(out.begin(), out.end());
  return out;
}

DyadCensus dyad_census(const DirectedGraph& g) {
  DyadCensus c;
  c.n = g.node_count();
  for (const auto& [from, to] : g.sorted_edges()) {
    if (from < to && g.has_edge(to, from)) ++c.d_mut;
  }
  c.d_asym = g.edge_count() - 2 * c.d_mut;
  c.d_null = c.n * (c.n - 1) / 2 - c.d_asym - c.d_mut;
  return c;
}

std::pair<std::int64_t, std::int64_t> pair_from_index(std::int64_t n,
                                                      std::int64_t k) {
  // Solve i from the triangular offsets, then correct for rounding.
  double nd = static_cast<double>(n);
  std::int64_t i = static_cast<std::int64_t>(
      std::floor(nd - 0.5 - std::sqrt((nd - 0.5) * (nd - 0.5) - 2.0 * k)));
  while (pair_index(n, i + 1, i + 2) <= k) ++i;
  while (i > 0 && pair_index(n, i, i + 1) > k) --i;
  std::int64_t j = k - pair_index(n, i, i + 1) + i + 1;
  return {i, j};
}

namespace {

std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::int64_t parse_index_label(const std::string& label, std::int64_t n,
                               std::int64_t lineno) {
  std::int64_t value = 0;
  const auto [ptr, ec] =
      std::from_chars(label.data(), label.data() + label.size(), value);
  if (ec != std::errc() || ptr != label.data() + label.size())
    throw Error(ErrorCode::kParse,
                "line " + std::to_string(lineno) + ": label '" + label +
                    "' is not an integer node index (required with a fixed "
                    "node count)");
  if (value < 0 || value >= n)
    throw Error(ErrorCode::kParse, "line " + std::to_string(lineno) +
                                       ": node index " + label +
                                       " outside [0, " + std::to_string(n) +
                                       ")");
  return value;
}

}  // namespace

DirectedGraph load_edge_list(const std::string& path,
                             const EdgeListOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open edge list: " + path);

  const bool fixed_n = options.n_nodes > 0;
  DirectedGraph g(fixed_n ? options.n_nodes : 0);

  std::string line;
  std::int64_t lineno = 0;
  bool header_pending = options.skip_header;
  while (std::getline(in, line)) {
    ++lineno;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    auto fields = split_fields(stripped, options.delimiter);
    if (fields.size() != 2)
      throw Error(ErrorCode::kParse,
                  "line " + std::to_string(lineno) + ": expected 2 fields, got " +
                      std::to_string(fields.size()));
    const std::string src = trim(fields[0]);
    const std::string dst = trim(fields[1]);
    if (src.empty() || dst.empty())
      throw Error(ErrorCode::kParse,
                  "line " + std::to_string(lineno) + ": empty node label");
    if (src == dst)
      throw Error(ErrorCode::kInvalid, "line " + std::to_string(lineno) +
                                           ": self-loop on node '" + src + "'");

    std::int64_t i, j;
    if (fixed_n) {
      i = parse_index_label(src, options.n_nodes, lineno);
      j = parse_index_label(dst, options.n_nodes, lineno);
    } else {
      auto idx = g.index_of(src);
      i = idx ? *idx : g.add_node(src);
      idx = g.index_of(dst);
      j = idx ? *idx : g.add_node(dst);
    }
    g.add_edge(i, j);
  }
  return g;
}

void write_edge_list(const DirectedGraph& g, const std::string& path,
                     char delimiter) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write edge list: " + path);
  for (const auto& [from, to] : g.sorted_edges())
    out << g.label(from) << delimiter << g.label(to) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

}  // namespace recip
