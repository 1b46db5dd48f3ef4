#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "sglgg/core.hpp"
#include "sglgg/selection.hpp"
#include "sglgg/solver.hpp"

namespace sglgg {

/// A data-file problem, with file/line/column context in the message.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace io_detail {

inline std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open file");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

inline char detect_delimiter(const std::string& header) {
  return header.find('\t') != std::string::npos ? '\t' : ',';
}

inline double parse_number(const std::string& token, const std::string& path, std::size_t line,
                           std::size_t column) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw IoError(path + ":" + std::to_string(line) + ": non-numeric cell '" + token +
                  "' in column " + std::to_string(column));
  return value;
}

}  // namespace io_detail

/// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double value) {
  char buf[40];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
    double parsed = 0.0;
    const auto [ptr, ec] = std::from_chars(buf, buf + std::strlen(buf), parsed);
    if (ec == std::errc() && parsed == value) break;
  }
  return buf;
}

/// Writes content to a temporary file in the target directory and renames it
/// into place, so readers never observe a partial file.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(tmp.string() + ": cannot open for writing");
    out << content;
    if (!out) throw IoError(tmp.string() + ": write failed");
  }
  std::filesystem::rename(tmp, path);
}

/// FNV-1a 64-bit digest of a file's bytes, as fixed-width hex.
inline std::string digest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open file");
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(hash));
  return out;
}

// ---------------------------------------------------------------------------
// Design loaders
// ---------------------------------------------------------------------------

/// Matrix file: header row of feature ids, then one row per sample with the
/// sample id in the first column. Comma or tab delimited.
inline Dataset load_matrix(const std::string& path) {
  const auto lines = io_detail::read_lines(path);
  if (lines.size() < 2) throw IoError(path + ": expected a header row and at least one data row");
  const char delim = io_detail::detect_delimiter(lines[0]);
  auto header = io_detail::split(lines[0], delim);
  if (header.size() < 2) throw IoError(path + ":1: header must list at least one feature id");
  Dataset data;
  data.feature_ids.assign(header.begin() + 1, header.end());
  const std::size_t p = data.feature_ids.size();
  const std::size_t n = lines.size() - 1;
  data.a.resize(static_cast<Index>(n), static_cast<Index>(p));
  data.y = VectorXd::Zero(static_cast<Index>(n));
  data.sample_ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cells = io_detail::split(lines[i + 1], delim);
    if (cells.size() != p + 1)
      throw IoError(path + ":" + std::to_string(i + 2) + ": expected " + std::to_string(p + 1) +
                    " cells, found " + std::to_string(cells.size()));
    data.sample_ids.push_back(cells[0]);
    for (std::size_t j = 0; j < p; ++j)
      data.a(static_cast<Index>(i), static_cast<Index>(j)) =
          io_detail::parse_number(cells[j + 1], path, i + 2, j + 2);
  }
  return data;
}

/// Phenotype file: sample id, value. Row order need not match the matrix;
/// rows are joined by sample id.
inline void load_phenotype(const std::string& path, Dataset& data) {
  const auto lines = io_detail::read_lines(path);
  if (lines.empty()) throw IoError(path + ": empty phenotype file");
  const char delim = io_detail::detect_delimiter(lines[0]);
  std::unordered_map<std::string, double> values;
  values.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto cells = io_detail::split(lines[i], delim);
    if (cells.size() != 2)
      throw IoError(path + ":" + std::to_string(i + 1) + ": expected 2 cells, found " +
                    std::to_string(cells.size()));
    if (!values.emplace(cells[0], io_detail::parse_number(cells[1], path, i + 1, 2)).second)
      throw IoError(path + ":" + std::to_string(i + 1) + ": duplicate sample id '" + cells[0] + "'");
  }
  if (values.size() != data.sample_ids.size())
    throw IoError(path + ": phenotype lists " + std::to_string(values.size()) +
                  " samples, matrix has " + std::to_string(data.sample_ids.size()));
  for (std::size_t i = 0; i < data.sample_ids.size(); ++i) {
    const auto it = values.find(data.sample_ids[i]);
    if (it == values.end())
      throw IoError(path + ": no phenotype for sample '" + data.sample_ids[i] + "'");
    data.y[static_cast<Index>(i)] = it->second;
  }
}

/// Group file: feature id, group id. Every matrix feature must appear exactly
/// once. Groups are indexed by first appearance.
inline std::pair<GroupMap, std::vector<std::string>> load_groups(const std::string& path,
                                                                 const std::vector<std::string>& feature_ids) {
  const auto lines = io_detail::read_lines(path);
  if (lines.empty()) throw IoError(path + ": empty group file");
  const char delim = io_detail::detect_delimiter(lines[0]);
  std::unordered_map<std::string, std::size_t> feature_index;
  for (std::size_t j = 0; j < feature_ids.size(); ++j) feature_index.emplace(feature_ids[j], j);

  std::vector<int> assignment(feature_ids.size(), -1);
  std::vector<std::string> group_names;
  std::unordered_map<std::string, int> group_index;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto cells = io_detail::split(lines[i], delim);
    if (cells.size() != 2)
      throw IoError(path + ":" + std::to_string(i + 1) + ": expected 2 cells, found " +
                    std::to_string(cells.size()));
    const auto it = feature_index.find(cells[0]);
    if (it == feature_index.end())
      throw IoError(path + ":" + std::to_string(i + 1) + ": feature '" + cells[0] +
                    "' is not a column of the matrix");
    if (assignment[it->second] != -1)
      throw IoError(path + ":" + std::to_string(i + 1) + ": feature '" + cells[0] +
                    "' assigned to more than one group");
    auto [git, inserted] = group_index.emplace(cells[1], static_cast<int>(group_names.size()));
    if (inserted) group_names.push_back(cells[1]);
    assignment[it->second] = git->second;
  }
  for (std::size_t j = 0; j < assignment.size(); ++j)
    if (assignment[j] == -1)
      throw IoError(path + ": feature '" + feature_ids[j] + "' has no group assignment");
  return {GroupMap::from_assignment(std::move(assignment)), std::move(group_names)};
}

/// Graph file: group id, group id, signed weight.
inline GeneGraph load_graph(const std::string& path, const std::vector<std::string>& group_names) {
  const auto lines = io_detail::read_lines(path);
  std::unordered_map<std::string, int> group_index;
  for (std::size_t g = 0; g < group_names.size(); ++g)
    group_index.emplace(group_names[g], static_cast<int>(g));
  GeneGraph graph = GeneGraph::empty(static_cast<int>(group_names.size()));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const char delim = io_detail::detect_delimiter(lines[i]);
    const auto cells = io_detail::split(lines[i], delim);
    if (cells.size() != 3)
      throw IoError(path + ":" + std::to_string(i + 1) + ": expected 3 cells, found " +
                    std::to_string(cells.size()));
    const auto a = group_index.find(cells[0]);
    const auto b = group_index.find(cells[1]);
    if (a == group_index.end())
      throw IoError(path + ":" + std::to_string(i + 1) + ": unknown group id '" + cells[0] + "'");
    if (b == group_index.end())
      throw IoError(path + ":" + std::to_string(i + 1) + ": unknown group id '" + cells[1] + "'");
    graph.add_edge(a->second, b->second, io_detail::parse_number(cells[2], path, i + 1, 3));
  }
  try {
    validate_graph(graph);
  } catch (const std::invalid_argument& err) {
    throw IoError(path + ": " + err.what());
  }
  return graph;
}

struct LoadedDesign {
  Dataset data;
  GroupMap groups;
  GeneGraph graph;
  std::vector<std::string> group_names;
};

/// Loads and cross-validates the four design files. The matrix's column
/// order defines the canonical feature index space.
inline LoadedDesign load_design(const std::string& matrix_path, const std::string& phenotype_path,
                                const std::string& groups_path, const std::string& graph_path) {
  Dataset data = load_matrix(matrix_path);
  load_phenotype(phenotype_path, data);
  auto [groups, group_names] = load_groups(groups_path, data.feature_ids);
  GeneGraph graph = load_graph(graph_path, group_names);
  validate_dataset(data);
  return LoadedDesign{std::move(data), std::move(groups), std::move(graph), std::move(group_names)};
}

// ---------------------------------------------------------------------------
// Writers (bit-exact round trips)
// ---------------------------------------------------------------------------

inline std::string matrix_csv(const Dataset& data) {
  std::string out = "sample_id";
  for (const auto& id : data.feature_ids) out += "," + id;
  out += "\n";
  for (Index i = 0; i < data.n(); ++i) {
    out += data.sample_ids[static_cast<std::size_t>(i)];
    for (Index j = 0; j < data.p(); ++j) out += "," + format_double(data.a(i, j));
    out += "\n";
  }
  return out;
}

inline std::string phenotype_csv(const Dataset& data) {
  std::string out;
  for (Index i = 0; i < data.n(); ++i)
    out += data.sample_ids[static_cast<std::size_t>(i)] + "," + format_double(data.y[i]) + "\n";
  return out;
}

inline std::string groups_csv(const std::vector<std::string>& feature_ids, const GroupMap& groups,
                              const std::vector<std::string>& group_names) {
  std::string out;
  for (std::size_t j = 0; j < feature_ids.size(); ++j)
    out += feature_ids[j] + "," + group_names[static_cast<std::size_t>(groups.assignment()[j])] + "\n";
  return out;
}

inline std::string graph_csv(const GeneGraph& graph, const std::vector<std::string>& group_names) {
  std::string out;
  for (const auto& e : graph.edges)
    out += group_names[static_cast<std::size_t>(e.i)] + "," + group_names[static_cast<std::size_t>(e.j)] +
           "," + format_double(e.r) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline std::string coefficients_csv(const FitResult& fit, const std::vector<std::string>& feature_ids,
                                    const GroupMap& groups) {
  std::string out = "feature_id,beta,g,s\n";
  const VectorXd g_expanded = groups.expand(fit.g);
  for (Index j = 0; j < fit.beta.size(); ++j)
    out += feature_ids[static_cast<std::size_t>(j)] + "," + format_double(fit.beta[j]) + "," +
           format_double(g_expanded[j]) + "," + format_double(fit.s[j]) + "\n";
  return out;
}

inline std::string trace_csv(const FitResult& fit) {
  std::string out = "iteration,objective,primal_residual,dual_residual\n";
  for (std::size_t i = 0; i < fit.objective_trace.size(); ++i)
    out += std::to_string(i + 1) + "," + format_double(fit.objective_trace[i]) + "," +
           format_double(fit.primal_residuals[i]) + "," + format_double(fit.dual_residuals[i]) + "\n";
  return out;
}

inline std::string cv_csv(const CvReport& report) {
  std::string out = "l1,l2,l3,mean_mse,std_mse\n";
  for (std::size_t i = 0; i < report.grid.size(); ++i)
    out += format_double(report.grid[i].l1) + "," + format_double(report.grid[i].l2) + "," +
           format_double(report.grid[i].l3) + "," + format_double(report.mean_mse[i]) + "," +
           format_double(report.std_mse[i]) + "\n";
  return out;
}

/// One row per feature: id, frequency, rank (1-based, descending frequency,
/// ties by ascending feature index).
inline std::string stability_csv(const StabilityReport& report, const std::vector<std::string>& feature_ids) {
  const auto order = rank_top_k(report, static_cast<int>(report.frequency.size()));
  std::vector<int> rank(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    rank[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos) + 1;
  std::string out = "feature_id,frequency,rank\n";
  for (Index j = 0; j < report.frequency.size(); ++j)
    out += feature_ids[static_cast<std::size_t>(j)] + "," + format_double(report.frequency[j]) + "," +
           std::to_string(rank[static_cast<std::size_t>(j)]) + "\n";
  return out;
}

}  // namespace sglgg
