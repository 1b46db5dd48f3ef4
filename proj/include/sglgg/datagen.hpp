#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sglgg/core.hpp"
#include "sglgg/parallel.hpp"

namespace sglgg {

/// Recipe for a synthetic instance with planted two-level ground truth.
struct SyntheticSpec {
  Index n = 0;
  int k = 0;
  std::vector<int> sizes;          // per-group feature counts
  std::vector<int> active_groups;  // groups with nonzero gate
  double active_fraction_within = 1.0;
  GeneGraph graph;                 // over the k groups
  double noise_sd = 0.0;
  double correlation = 0.0;        // within-group feature correlation
  std::uint64_t seed = 0;
};

struct GroundTruth {
  VectorXd g_true;
  VectorXd s_true;
  VectorXd beta_true;  // = (M^T g_true) o s_true
  std::vector<int> support;
};

struct SyntheticData {
  Dataset data;
  GroupMap groups;
  GeneGraph graph;
  GroundTruth truth;
};

namespace detail {

inline void validate_spec(const SyntheticSpec& spec) {
  if (spec.n < 1) throw std::invalid_argument("synthetic spec needs n >= 1");
  if (spec.k < 1 || static_cast<int>(spec.sizes.size()) != spec.k)
    throw std::invalid_argument("synthetic spec needs one size per group");
  for (int s : spec.sizes)
    if (s < 1) throw std::invalid_argument("group sizes must be positive");
  std::vector<int> active = spec.active_groups;
  std::sort(active.begin(), active.end());
  if (std::adjacent_find(active.begin(), active.end()) != active.end())
    throw std::invalid_argument("active group list has duplicates");
  for (int a : active)
    if (a < 0 || a >= spec.k) throw std::invalid_argument("active group index out of range");
  if (!(spec.active_fraction_within > 0.0) || spec.active_fraction_within > 1.0)
    throw std::invalid_argument("active fraction must be in (0, 1]");
  for (int a : spec.active_groups) {
    const double count = spec.active_fraction_within * spec.sizes[static_cast<std::size_t>(a)];
    if (count < 1.0)
      throw std::invalid_argument("active fraction leaves group " + std::to_string(a) +
                                  " without any active feature");
  }
  if (spec.noise_sd < 0) throw std::invalid_argument("noise_sd must be non-negative");
  if (spec.correlation < 0 || spec.correlation >= 1.0)
    throw std::invalid_argument("correlation must be in [0, 1)");
  if (spec.graph.k != spec.k)
    throw std::invalid_argument("graph node count does not match group count");
  validate_graph(spec.graph);
}

/// Gate values on active groups: magnitude 1, signs propagated along edges so
/// that every active edge (i, j, r) satisfies g_j = sign(r) g_i.
inline VectorXd plant_gates(const SyntheticSpec& spec) {
  std::vector<char> active(static_cast<std::size_t>(spec.k), 0);
  for (int a : spec.active_groups) active[static_cast<std::size_t>(a)] = 1;
  std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(spec.k));
  for (const auto& e : spec.graph.edges) {
    if (active[static_cast<std::size_t>(e.i)] && active[static_cast<std::size_t>(e.j)]) {
      adj[static_cast<std::size_t>(e.i)].push_back({e.j, e.r});
      adj[static_cast<std::size_t>(e.j)].push_back({e.i, e.r});
    }
  }
  VectorXd g = VectorXd::Zero(spec.k);
  for (int start : spec.active_groups) {
    if (g[start] != 0.0) continue;
    g[start] = 1.0;
    std::queue<int> queue;
    queue.push(start);
    while (!queue.empty()) {
      const int at = queue.front();
      queue.pop();
      for (const auto& [next, r] : adj[static_cast<std::size_t>(at)]) {
        const double want = (r > 0 ? 1.0 : -1.0) * g[at];
        if (g[next] == 0.0) {
          g[next] = want;
          queue.push(next);
        } else if (g[next] != want) {
          throw std::invalid_argument("edge signs over active groups are inconsistent");
        }
      }
    }
  }
  return g;
}

}  // namespace detail

/// Draws a standardized design with single-factor within-group correlation,
/// plants (g_true, s_true) and produces y = A beta_true + noise.
/// Deterministic given the seed.
inline SyntheticData simulate(const SyntheticSpec& spec) {
  detail::validate_spec(spec);
  GroupMap groups = GroupMap::contiguous(spec.sizes);
  const Index n = spec.n;
  const Index p = groups.p();

  auto rng = rng_for(spec.seed, 0x5D47A3ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> magnitude(0.5, 1.5);

  MatrixXd a(n, p);
  const double c = spec.correlation;
  const double factor_mix = std::sqrt(c), noise_mix = std::sqrt(1.0 - c);
  VectorXd factor(n);
  Index col = 0;
  for (int k = 0; k < spec.k; ++k) {
    for (Index i = 0; i < n; ++i) factor[i] = normal(rng);
    for (int t = 0; t < spec.sizes[static_cast<std::size_t>(k)]; ++t, ++col) {
      for (Index i = 0; i < n; ++i) a(i, col) = factor_mix * factor[i] + noise_mix * normal(rng);
    }
  }
  // standardize: sample mean 0, population variance 1
  for (Index j = 0; j < p; ++j) {
    const double mean = a.col(j).mean();
    a.col(j).array() -= mean;
    const double sd = std::sqrt(a.col(j).squaredNorm() / static_cast<double>(n));
    if (!(sd > 1e-12)) throw std::runtime_error("degenerate synthetic column " + std::to_string(j));
    a.col(j) /= sd;
  }

  GroundTruth truth;
  truth.g_true = detail::plant_gates(spec);
  truth.s_true = VectorXd::Zero(p);
  for (int k : spec.active_groups) {
    const auto& members = groups.members()[static_cast<std::size_t>(k)];
    const int count = static_cast<int>(std::floor(
        spec.active_fraction_within * static_cast<double>(members.size()) + 1e-12));
    std::vector<int> chosen = members;
    std::shuffle(chosen.begin(), chosen.end(), rng);
    chosen.resize(static_cast<std::size_t>(count));
    std::sort(chosen.begin(), chosen.end());
    for (int j : chosen) {
      const double sign = (rng() & 1ULL) ? 1.0 : -1.0;
      truth.s_true[j] = sign * magnitude(rng);
    }
  }
  truth.beta_true = effective_coefficients(truth.g_true, truth.s_true, groups);
  for (Index j = 0; j < p; ++j)
    if (truth.beta_true[j] != 0.0) truth.support.push_back(static_cast<int>(j));

  VectorXd y = a * truth.beta_true;
  if (spec.noise_sd > 0)
    for (Index i = 0; i < n; ++i) y[i] += spec.noise_sd * normal(rng);

  SyntheticData out{Dataset{}, std::move(groups), spec.graph, std::move(truth)};
  out.data.a = std::move(a);
  out.data.y = std::move(y);
  out.data.feature_ids = default_ids(p, "f");
  out.data.sample_ids = default_ids(n, "s");
  return out;
}

struct SupportMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Standard precision/recall/F1 against the planted support. An empty
/// selection scores precision 1 (no false positives), recall 0.
inline SupportMetrics support_metrics(const std::vector<int>& selected, const GroundTruth& truth) {
  std::vector<char> in_support;
  Index p = truth.beta_true.size();
  in_support.assign(static_cast<std::size_t>(p), 0);
  for (int j : truth.support) {
    if (j < 0 || static_cast<Index>(j) >= p) throw std::invalid_argument("support index out of range");
    in_support[static_cast<std::size_t>(j)] = 1;
  }
  int tp = 0;
  for (int j : selected) {
    if (j < 0 || static_cast<Index>(j) >= p) throw std::invalid_argument("selected index out of range");
    if (in_support[static_cast<std::size_t>(j)]) ++tp;
  }
  SupportMetrics m;
  m.precision = selected.empty() ? 1.0 : static_cast<double>(tp) / static_cast<double>(selected.size());
  m.recall = truth.support.empty() ? 1.0 : static_cast<double>(tp) / static_cast<double>(truth.support.size());
  m.f1 = (m.precision + m.recall) > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

}  // namespace sglgg
