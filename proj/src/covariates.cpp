#include "recip/covariates.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "recip/errors.hpp"
#include "recip/rng.hpp"

namespace recip {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite())
    throw Error(ErrorCode::kInvalid,
                std::string(what) + " covariates contain non-finite entries");
}

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

double parse_double(const std::string& field, std::int64_t lineno,
                    const std::string& path) {
  try {
    std::size_t consumed = 0;
    const double v = std::stod(field, &consumed);
    if (consumed != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, path + ": line " + std::to_string(lineno) +
                                       ": not a number: '" + field + "'");
  }
}

struct DelimitedTable {
  std::vector<std::string> columns;                // header, trimmed
  std::vector<std::vector<std::string>> rows;      // trimmed fields
  std::vector<std::int64_t> line_numbers;
};

DelimitedTable read_table(const std::string& path, char delim) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open covariate file: " + path);
  DelimitedTable table;
  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    auto fields = split_fields(stripped, delim);
    for (auto& f : fields) f = trim(f);
    if (table.columns.empty()) {
      table.columns = std::move(fields);
    } else {
      if (fields.size() != table.columns.size())
        throw Error(ErrorCode::kParse,
                    path + ": line " + std::to_string(lineno) + ": expected " +
                        std::to_string(table.columns.size()) + " fields, got " +
                        std::to_string(fields.size()));
      table.rows.push_back(std::move(fields));
      table.line_numbers.push_back(lineno);
    }
  }
  if (table.columns.empty())
    throw Error(ErrorCode::kParse, path + ": empty file");
  return table;
}

std::size_t find_column(const DelimitedTable& table, const std::string& name,
                        const std::string& path) {
  auto it = std::find(table.columns.begin(), table.columns.end(), name);
  if (it == table.columns.end())
    throw Error(ErrorCode::kInvalid,
                path + ": missing required column '" + name + "'");
  return static_cast<std::size_t>(it - table.columns.begin());
}

}  // namespace

CovariateSet::CovariateSet(std::int64_t n, Eigen::MatrixXd x, Eigen::MatrixXd y,
                           Eigen::MatrixXd v, std::vector<std::string> x_names,
                           std::vector<std::string> y_names,
                           std::vector<std::string> v_names)
    : n_(n),
      x_(std::move(x)),
      y_(std::move(y)),
      v_(std::move(v)),
      x_names_(std::move(x_names)),
      y_names_(std::move(y_names)),
      v_names_(std::move(v_names)) {
  const std::int64_t dyads = n * (n - 1) / 2;
  if (x_.rows() != n || y_.rows() != n)
    throw Error(ErrorCode::kInvalid, "node covariate rows must equal n");
  if (v_.cols() > 0 && v_.rows() != dyads)
    throw Error(ErrorCode::kInvalid,
                "dyad covariate rows must equal n(n-1)/2");
  if (v_.cols() == 0) v_.resize(dyads, 0);
  require_finite(x_, "X");
  require_finite(y_, "Y");
  require_finite(v_, "V");
  auto default_names = [](std::vector<std::string>& names, const char* prefix,
                          int d) {
    if (!names.empty()) return;
    for (int k = 0; k < d; ++k)
      names.push_back(std::string(prefix) + std::to_string(k + 1));
  };
  default_names(x_names_, "x", d1());
  default_names(y_names_, "y", d2());
  default_names(v_names_, "v", d3());
  if (static_cast<int>(x_names_.size()) != d1() ||
      static_cast<int>(y_names_.size()) != d2() ||
      static_cast<int>(v_names_.size()) != d3())
    throw Error(ErrorCode::kInvalid, "covariate name count mismatch");
}

CovariateSet CovariateSet::zero(std::int64_t n, int d1, int d2, int d3) {
  const std::int64_t dyads = n * (n - 1) / 2;
  return CovariateSet(n, Eigen::MatrixXd::Zero(n, d1),
                      Eigen::MatrixXd::Zero(n, d2),
                      Eigen::MatrixXd::Zero(dyads, d3));
}

CovariateSet CovariateSet::uniform(std::int64_t n, int d1, int d2, int d3,
                                   std::uint64_t seed, double lo, double hi) {
  const double span = hi - lo;
  Eigen::MatrixXd x(n, d1), y(n, d2);
  for (std::int64_t i = 0; i < n; ++i) {
    auto rx = KeyedRng::from({seed, stream::kNodeX, std::uint64_t(i)});
    for (int k = 0; k < d1; ++k) x(i, k) = lo + span * rx.next_unit();
    auto ry = KeyedRng::from({seed, stream::kNodeY, std::uint64_t(i)});
    for (int k = 0; k < d2; ++k) y(i, k) = lo + span * ry.next_unit();
  }
  const std::int64_t dyads = n * (n - 1) / 2;
  Eigen::MatrixXd v(dyads, d3);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = i + 1; j < n; ++j) {
      auto rv = KeyedRng::from(
          {seed, stream::kDyadV, std::uint64_t(i), std::uint64_t(j)});
      const std::int64_t row = pair_index(n, i, j);
      for (int k = 0; k < d3; ++k) v(row, k) = lo + span * rv.next_unit();
    }
  }
  return CovariateSet(n, std::move(x), std::move(y), std::move(v));
}

void CovariateSet::center() {
  if (x_.size() > 0) x_.rowwise() -= x_.colwise().mean();
  if (y_.size() > 0) y_.rowwise() -= y_.colwise().mean();
  if (v_.size() > 0) v_.rowwise() -= v_.colwise().mean();
}

CovariateSet load_covariates(DirectedGraph& g, const std::string& node_path,
                             const std::string& dyad_path,
                             const std::vector<std::string>& x_cols,
                             const std::vector<std::string>& y_cols,
                             const CovariateLoadOptions& options) {
  const DelimitedTable node_table = read_table(node_path, options.delimiter);

  std::vector<std::size_t> x_idx, y_idx;
  for (const auto& name : x_cols)
    x_idx.push_back(find_column(node_table, name, node_path));
  for (const auto& name : y_cols)
    y_idx.push_back(find_column(node_table, name, node_path));

  // First pass over labels so new nodes (if allowed) enter in file order.
  for (std::size_t r = 0; r < node_table.rows.size(); ++r) {
    const std::string& label = node_table.rows[r][0];
    if (!g.index_of(label)) {
      if (!options.add_missing_nodes)
        throw Error(ErrorCode::kInvalid,
                    node_path + ": line " +
                        std::to_string(node_table.line_numbers[r]) +
                        ": unknown node label '" + label + "'");
      g.add_node(label);
    }
  }

  const std::int64_t n = g.node_count();
  const int d1 = static_cast<int>(x_idx.size());
  const int d2 = static_cast<int>(y_idx.size());
  Eigen::MatrixXd x(n, d1), y(n, d2);
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (std::size_t r = 0; r < node_table.rows.size(); ++r) {
    const auto& row = node_table.rows[r];
    const std::int64_t i = *g.index_of(row[0]);
    if (seen[std::size_t(i)])
      throw Error(ErrorCode::kInvalid,
                  node_path + ": duplicate node row for '" + row[0] + "'");
    seen[std::size_t(i)] = true;
    for (int k = 0; k < d1; ++k)
      x(i, k) =
          parse_double(row[x_idx[std::size_t(k)]], node_table.line_numbers[r],
                       node_path);
    for (int k = 0; k < d2; ++k)
      y(i, k) =
          parse_double(row[y_idx[std::size_t(k)]], node_table.line_numbers[r],
                       node_path);
  }
  for (std::int64_t i = 0; i < n; ++i)
    if (!seen[std::size_t(i)])
      throw Error(ErrorCode::kInvalid,
                  node_path + ": no covariate row for node '" + g.label(i) + "'");

  std::vector<std::string> v_names;
  const std::int64_t dyads = n * (n - 1) / 2;
  Eigen::MatrixXd v(dyads, 0);
  if (!dyad_path.empty()) {
    const DelimitedTable dyad_table = read_table(dyad_path, options.delimiter);
    if (dyad_table.columns.size() < 3)
      throw Error(ErrorCode::kParse,
                  dyad_path + ": need node_a,node_b and at least one value column");
    const int d3 = static_cast<int>(dyad_table.columns.size()) - 2;
    v_names.assign(dyad_table.columns.begin() + 2, dyad_table.columns.end());
    v.resize(dyads, d3);
    std::vector<bool> filled(static_cast<std::size_t>(dyads), false);
    for (std::size_t r = 0; r < dyad_table.rows.size(); ++r) {
      const auto& row = dyad_table.rows[r];
      const std::int64_t lineno = dyad_table.line_numbers[r];
      auto ia = g.index_of(row[0]);
      auto ib = g.index_of(row[1]);
      if (!ia || !ib)
        throw Error(ErrorCode::kInvalid,
                    dyad_path + ": line " + std::to_string(lineno) +
                        ": unknown node label '" + (!ia ? row[0] : row[1]) + "'");
      if (*ia == *ib)
        throw Error(ErrorCode::kInvalid, dyad_path + ": line " +
                                             std::to_string(lineno) +
                                             ": dyad row with equal endpoints");
      const std::int64_t i = std::min(*ia, *ib);
      const std::int64_t j = std::max(*ia, *ib);
      const std::int64_t idx = pair_index(n, i, j);
      Eigen::RowVectorXd values(d3);
      for (int k = 0; k < d3; ++k)
        values(k) = parse_double(row[std::size_t(k) + 2], lineno, dyad_path);
      if (filled[std::size_t(idx)]) {
        // Duplicated pair (either order) must agree exactly: V_ij = V_ji.
        if ((v.row(idx) - values).cwiseAbs().maxCoeff() > 0.0)
          throw Error(ErrorCode::kInvalid,
                      dyad_path + ": line " + std::to_string(lineno) +
                          ": inconsistent values for pair {" + row[0] + "," +
                          row[1] + "} (V_ij must equal V_ji)");
      } else {
        v.row(idx) = values;
        filled[std::size_t(idx)] = true;
      }
    }
    for (std::int64_t idx = 0; idx < dyads; ++idx)
      if (!filled[std::size_t(idx)]) {
        const auto [i, j] = pair_from_index(n, idx);
        throw Error(ErrorCode::kInvalid,
                    dyad_path + ": missing dyad row for pair {" + g.label(i) +
                        "," + g.label(j) + "}");
      }
  }

  CovariateSet out(n, std::move(x), std::move(y), std::move(v), x_cols, y_cols,
                   std::move(v_names));
  if (options.center) out.center();
  return out;
}

void write_covariates(const CovariateSet& c, const DirectedGraph& g,
                      const std::string& node_path,
                      const std::string& dyad_path, char delimiter) {
  const std::int64_t n = c.node_count();
  if (n != g.node_count())
    throw Error(ErrorCode::kInvalid, "covariates not aligned with graph");
  {
    std::ofstream out(node_path);
    if (!out) throw Error(ErrorCode::kIo, "cannot write: " + node_path);
    out << "node";
    for (const auto& name : c.x_names()) out << delimiter << name;
    for (const auto& name : c.y_names()) out << delimiter << name;
    out << '\n';
    out.precision(17);
    for (std::int64_t i = 0; i < n; ++i) {
      out << g.label(i);
      for (int k = 0; k < c.d1(); ++k) out << delimiter << c.x()(i, k);
      for (int k = 0; k < c.d2(); ++k) out << delimiter << c.y()(i, k);
      out << '\n';
    }
  }
  if (dyad_path.empty()) return;
  std::ofstream out(dyad_path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write: " + dyad_path);
  out << "node_a" << delimiter << "node_b";
  for (const auto& name : c.v_names()) out << delimiter << name;
  out << '\n';
  out.precision(17);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = i + 1; j < n; ++j) {
      out << g.label(i) << delimiter << g.label(j);
      const auto row = c.v_row(i, j);
      for (int k = 0; k < c.d3(); ++k) out << delimiter << row(k);
      out << '\n';
    }
}

ConditioningReport check_covariate_conditioning(const CovariateSet& c,
                                                const DirectedGraph& g,
                                                double threshold) {
  if (c.node_count() != g.node_count())
    throw Error(ErrorCode::kInvalid, "covariates not aligned with graph");
  const std::int64_t n = c.node_count();
  const std::int64_t dyads = n * (n - 1) / 2;
  const int dim = c.d1() + c.d2() + c.d3();
  ConditioningReport report;
  report.threshold = threshold;
  report.dim = dim;
  if (dim == 0 || dyads == 0) {
    report.warning = true;
    return report;
  }

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd w(dim);
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = i + 1; j < n; ++j) {
      int at = 0;
      for (int k = 0; k < c.d1(); ++k) w(at++) = c.x()(i, k) + c.x()(j, k);
      for (int k = 0; k < c.d2(); ++k) w(at++) = c.y()(i, k) + c.y()(j, k);
      const auto vrow = c.v_row(i, j);
      for (int k = 0; k < c.d3(); ++k) w(at++) = vrow(k);
      mean += w;
      second.selfadjointView<Eigen::Lower>().rankUpdate(w, 1.0);
    }
  mean /= static_cast<double>(dyads);
  Eigen::MatrixXd cov = second.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(dyads);
  cov -= mean * mean.transpose();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  report.min_eigenvalue = solver.eigenvalues().minCoeff();
  report.warning = report.min_eigenvalue < threshold;
  return report;
}

}  // namespace recip
