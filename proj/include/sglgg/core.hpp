#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace sglgg {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr const char* kVersion = "0.1.0";

/// Thrown when an iterative solver produces non-finite values or otherwise
/// fails to make progress.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

/// Column means (and response mean) removed by centering. Retained so that
/// predictions on new rows apply the training-set statistics.
struct Centering {
  VectorXd col_means;
  double y_mean = 0.0;
};

/// A regression instance: design matrix `a` (n samples x p features) and
/// response `y`. `centering` is set once center_dataset has been applied.
struct Dataset {
  MatrixXd a;
  VectorXd y;
  std::vector<std::string> feature_ids;
  std::vector<std::string> sample_ids;
  std::optional<Centering> centering;

  Index n() const { return a.rows(); }
  Index p() const { return a.cols(); }
};

inline std::vector<std::string> default_ids(Index count, const std::string& prefix) {
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) ids.push_back(prefix + std::to_string(i));
  return ids;
}

inline void validate_dataset(const Dataset& data) {
  if (data.n() < 1 || data.p() < 1)
    throw std::invalid_argument("dataset must have at least one sample and one feature");
  if (data.y.size() != data.n())
    throw std::invalid_argument("response length " + std::to_string(data.y.size()) +
                                " does not match sample count " + std::to_string(data.n()));
  if (!data.a.allFinite()) {
    for (Index i = 0; i < data.n(); ++i)
      for (Index j = 0; j < data.p(); ++j)
        if (!std::isfinite(data.a(i, j)))
          throw std::invalid_argument("non-finite matrix entry at row " + std::to_string(i) +
                                      ", column " + std::to_string(j));
  }
  if (!data.y.allFinite()) {
    for (Index i = 0; i < data.n(); ++i)
      if (!std::isfinite(data.y(i)))
        throw std::invalid_argument("non-finite response entry at row " + std::to_string(i));
  }
  if (!data.feature_ids.empty() && static_cast<Index>(data.feature_ids.size()) != data.p())
    throw std::invalid_argument("feature id count does not match matrix columns");
  if (!data.sample_ids.empty() && static_cast<Index>(data.sample_ids.size()) != data.n())
    throw std::invalid_argument("sample id count does not match matrix rows");
}

/// Subtracts column means from `a` and the mean from `y`. The subtracted
/// means are stored on the result (composed with any earlier centering) so
/// held-out predictions can reuse them.
inline Dataset center_dataset(const Dataset& data) {
  validate_dataset(data);
  Dataset out = data;
  VectorXd col_means = data.a.colwise().mean();
  const double y_mean = data.y.mean();
  out.a.rowwise() -= col_means.transpose();
  out.y.array() -= y_mean;
  Centering c;
  if (data.centering) {
    c.col_means = data.centering->col_means + col_means;
    c.y_mean = data.centering->y_mean + y_mean;
  } else {
    c.col_means = std::move(col_means);
    c.y_mean = y_mean;
  }
  out.centering = std::move(c);
  return out;
}

// ---------------------------------------------------------------------------
// GroupMap
// ---------------------------------------------------------------------------

/// Non-overlapping, exhaustive assignment of p features to K groups. The
/// binary mapping matrix is kept implicit: expand() gathers group values to
/// features and group_sums() scatter-adds feature values into groups.
class GroupMap {
 public:
  static GroupMap from_assignment(std::vector<int> assignment) {
    if (assignment.empty()) throw std::invalid_argument("group assignment must be non-empty");
    int k = 0;
    for (int a : assignment) {
      if (a < 0) throw std::invalid_argument("group index must be non-negative");
      k = std::max(k, a + 1);
    }
    GroupMap map;
    map.assignment_ = std::move(assignment);
    map.k_ = k;
    map.group_sizes_.assign(static_cast<std::size_t>(k), 0);
    map.members_.assign(static_cast<std::size_t>(k), {});
    for (std::size_t j = 0; j < map.assignment_.size(); ++j) {
      const int a = map.assignment_[j];
      ++map.group_sizes_[static_cast<std::size_t>(a)];
      map.members_[static_cast<std::size_t>(a)].push_back(static_cast<int>(j));
    }
    for (int g = 0; g < k; ++g)
      if (map.group_sizes_[static_cast<std::size_t>(g)] == 0)
        throw std::invalid_argument("group " + std::to_string(g) + " is empty");
    return map;
  }

  /// Groups laid out consecutively: sizes[0] features in group 0, and so on.
  static GroupMap contiguous(const std::vector<int>& sizes) {
    std::vector<int> assignment;
    for (std::size_t g = 0; g < sizes.size(); ++g) {
      if (sizes[g] < 1) throw std::invalid_argument("group sizes must be positive");
      assignment.insert(assignment.end(), static_cast<std::size_t>(sizes[g]), static_cast<int>(g));
    }
    return from_assignment(std::move(assignment));
  }

  int k() const { return k_; }
  Index p() const { return static_cast<Index>(assignment_.size()); }
  const std::vector<int>& assignment() const { return assignment_; }
  const std::vector<int>& group_sizes() const { return group_sizes_; }
  const std::vector<std::vector<int>>& members() const { return members_; }

  /// M^T g: per-feature copy of its group's value.
  VectorXd expand(const VectorXd& g) const {
    if (g.size() != k_) throw std::invalid_argument("group vector length does not match group count");
    VectorXd out(p());
    for (Index j = 0; j < p(); ++j) out[j] = g[assignment_[static_cast<std::size_t>(j)]];
    return out;
  }

  /// M v: per-group sum of feature values.
  VectorXd group_sums(const VectorXd& v) const {
    if (v.size() != p()) throw std::invalid_argument("feature vector length does not match feature count");
    VectorXd out = VectorXd::Zero(k_);
    for (Index j = 0; j < p(); ++j) out[assignment_[static_cast<std::size_t>(j)]] += v[j];
    return out;
  }

 private:
  std::vector<int> assignment_;
  std::vector<int> group_sizes_;
  std::vector<std::vector<int>> members_;
  int k_ = 0;
};

// ---------------------------------------------------------------------------
// GeneGraph and incidence matrix
// ---------------------------------------------------------------------------

struct GraphEdge {
  int i = 0;
  int j = 0;
  double r = 0.0;  // signed weight, nonzero
};

/// Weighted undirected graph over the K groups. Edges are stored with i < j.
struct GeneGraph {
  int k = 0;
  std::vector<GraphEdge> edges;

  static GeneGraph empty(int k) {
    GeneGraph g;
    g.k = k;
    return g;
  }

  void add_edge(int i, int j, double r) {
    if (i > j) std::swap(i, j);
    edges.push_back(GraphEdge{i, j, r});
  }
};

inline void validate_graph(const GeneGraph& graph) {
  if (graph.k < 0) throw std::invalid_argument("graph node count must be non-negative");
  std::vector<std::pair<int, int>> seen;
  seen.reserve(graph.edges.size());
  for (const auto& e : graph.edges) {
    if (e.i < 0 || e.j < 0 || e.i >= graph.k || e.j >= graph.k)
      throw std::invalid_argument("edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                                  ") has node index outside [0," + std::to_string(graph.k) + ")");
    if (e.i == e.j)
      throw std::invalid_argument("self-loop at node " + std::to_string(e.i) + " is not allowed");
    if (e.i > e.j)
      throw std::invalid_argument("edge endpoints must be in canonical order i < j");
    if (e.r == 0.0 || !std::isfinite(e.r))
      throw std::invalid_argument("edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                                  ") must have a finite nonzero weight");
    seen.emplace_back(e.i, e.j);
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw std::invalid_argument("duplicate edge in graph");
}

/// Maps a raw edge weight r to the positive fusion weight tau(r).
struct EdgeWeightFn {
  enum class Kind { absolute, unit, custom };

  Kind kind = Kind::absolute;
  std::function<double(double)> fn;  // used when kind == custom

  static EdgeWeightFn absolute() { return EdgeWeightFn{Kind::absolute, {}}; }
  static EdgeWeightFn unit() { return EdgeWeightFn{Kind::unit, {}}; }
  static EdgeWeightFn custom(std::function<double(double)> f) {
    return EdgeWeightFn{Kind::custom, std::move(f)};
  }

  double operator()(double r) const {
    switch (kind) {
      case Kind::absolute: return std::abs(r);
      case Kind::unit: return 1.0;
      case Kind::custom: return fn(r);
    }
    return std::abs(r);
  }
};

/// |E| x K sparse matrix with one row per edge. Row e for edge (i, j, r)
/// carries tau(r) at column i and -sign(r)*tau(r) at column j, so that
/// sum_e |(T g)_e| equals the edge-wise fusion penalty
/// sum_{(i,j)} tau(r_ij) |g_i - sign(r_ij) g_j|.
using IncidenceMatrix = Eigen::SparseMatrix<double>;

inline IncidenceMatrix build_incidence(const GeneGraph& graph,
                                       const EdgeWeightFn& edge_weight = EdgeWeightFn::absolute()) {
  validate_graph(graph);
  IncidenceMatrix t(static_cast<Index>(graph.edges.size()), graph.k);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * graph.edges.size());
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto& edge = graph.edges[e];
    const double tau = edge_weight(edge.r);
    if (!(tau > 0.0) || !std::isfinite(tau))
      throw std::invalid_argument("edge weight function must be positive and finite (edge (" +
                                  std::to_string(edge.i) + "," + std::to_string(edge.j) + "))");
    const double sign = edge.r > 0.0 ? 1.0 : -1.0;
    triplets.emplace_back(static_cast<Index>(e), edge.i, tau);
    triplets.emplace_back(static_cast<Index>(e), edge.j, -sign * tau);
  }
  t.setFromTriplets(triplets.begin(), triplets.end());
  return t;
}

// ---------------------------------------------------------------------------
// Penalty
// ---------------------------------------------------------------------------

/// Regularization configuration: lambda1 (group sparsity, weighted by
/// group_weights), lambda2 (graph fusion), lambda3 (feature sparsity).
struct Penalty {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda3 = 0.0;
  VectorXd group_weights;  // length K, positive
  EdgeWeightFn edge_weight = EdgeWeightFn::absolute();
};

/// Default group weights sqrt(p_k), normalizing each group gate by its size.
inline VectorXd default_group_weights(const GroupMap& groups) {
  VectorXd w(groups.k());
  for (int g = 0; g < groups.k(); ++g)
    w[g] = std::sqrt(static_cast<double>(groups.group_sizes()[static_cast<std::size_t>(g)]));
  return w;
}

inline Penalty make_penalty(double lambda1, double lambda2, double lambda3, const GroupMap& groups,
                            EdgeWeightFn edge_weight = EdgeWeightFn::absolute()) {
  Penalty penalty;
  penalty.lambda1 = lambda1;
  penalty.lambda2 = lambda2;
  penalty.lambda3 = lambda3;
  penalty.group_weights = default_group_weights(groups);
  penalty.edge_weight = std::move(edge_weight);
  return penalty;
}

inline void validate_penalty(const Penalty& penalty, const GroupMap& groups) {
  if (penalty.lambda1 < 0 || penalty.lambda2 < 0 || penalty.lambda3 < 0)
    throw std::invalid_argument("penalty parameters must be non-negative");
  if (penalty.group_weights.size() != groups.k())
    throw std::invalid_argument("group weight count does not match group count");
  for (Index g = 0; g < penalty.group_weights.size(); ++g)
    if (!(penalty.group_weights[g] > 0) || !std::isfinite(penalty.group_weights[g]))
      throw std::invalid_argument("group weights must be positive and finite");
}

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

/// Effective per-feature coefficients beta = (M^T g) o s.
inline VectorXd effective_coefficients(const VectorXd& g, const VectorXd& s, const GroupMap& groups) {
  if (s.size() != groups.p())
    throw std::invalid_argument("feature coefficient length does not match feature count");
  return groups.expand(g).cwiseProduct(s);
}

/// 1/2 ||y - A beta||^2 + lambda1 sum_k w_k |g_k| + lambda2 ||T g||_1
/// + lambda3 ||s||_1 with beta = (M^T g) o s.
inline double objective(const Dataset& data, const VectorXd& g, const VectorXd& s,
                        const GroupMap& groups, const IncidenceMatrix& t, const Penalty& penalty) {
  if (data.p() != groups.p())
    throw std::invalid_argument("dataset feature count does not match group map");
  if (t.cols() != groups.k())
    throw std::invalid_argument("incidence matrix column count does not match group count");
  validate_penalty(penalty, groups);
  const VectorXd beta = effective_coefficients(g, s, groups);
  const VectorXd residual = data.y - data.a * beta;
  double value = 0.5 * residual.squaredNorm();
  value += penalty.lambda1 * penalty.group_weights.cwiseProduct(g.cwiseAbs()).sum();
  if (t.rows() > 0) value += penalty.lambda2 * (t * g).cwiseAbs().sum();
  value += penalty.lambda3 * s.cwiseAbs().sum();
  return value;
}

}  // namespace sglgg
