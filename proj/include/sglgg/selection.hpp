#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sglgg/baselines.hpp"
#include "sglgg/core.hpp"
#include "sglgg/parallel.hpp"
#include "sglgg/solver.hpp"

namespace sglgg {

enum class Method { sglgg, lasso, fused_lasso, sparse_group_lasso };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::sglgg: return "sglgg";
    case Method::lasso: return "lasso";
    case Method::fused_lasso: return "fused_lasso";
    case Method::sparse_group_lasso: return "sparse_group_lasso";
  }
  return "unknown";
}

inline Method parse_method(const std::string& name) {
  if (name == "sglgg") return Method::sglgg;
  if (name == "lasso") return Method::lasso;
  if (name == "fused_lasso" || name == "fused") return Method::fused_lasso;
  if (name == "sparse_group_lasso" || name == "sgl") return Method::sparse_group_lasso;
  throw std::invalid_argument("unknown method '" + name + "'");
}

/// One penalty configuration. Interpretation is per method:
///   sglgg:              (lambda1, lambda2, lambda3)
///   lasso:              (lambda, -, -)
///   fused_lasso:        (lambda_sparse, lambda_fuse, -)
///   sparse_group_lasso: (lambda_group, lambda_feature, -)
struct GridPoint {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
};

using Grid = std::vector<GridPoint>;

/// Everything needed to fit one method at one grid point. `groups` is
/// required for sglgg and sparse_group_lasso, `graph` for sglgg.
struct ModelSpec {
  Method method = Method::sglgg;
  const GroupMap* groups = nullptr;
  const GeneGraph* graph = nullptr;
  AdmmSettings settings;
};

inline FitResult fit_model(const Dataset& data, const ModelSpec& spec, const GridPoint& point) {
  switch (spec.method) {
    case Method::sglgg: {
      if (spec.groups == nullptr || spec.graph == nullptr)
        throw std::invalid_argument("sglgg requires a group map and a graph");
      const Penalty penalty = make_penalty(point.l1, point.l2, point.l3, *spec.groups);
      return fit_sglgg(data, *spec.groups, *spec.graph, penalty, spec.settings);
    }
    case Method::lasso:
      return lasso_fit(data, point.l1, spec.settings);
    case Method::fused_lasso:
      return fused_lasso_fit(data, point.l1, point.l2, spec.settings);
    case Method::sparse_group_lasso:
      if (spec.groups == nullptr)
        throw std::invalid_argument("sparse_group_lasso requires a group map");
      return sparse_group_lasso_fit(data, *spec.groups, point.l1, point.l2, spec.settings);
  }
  throw std::invalid_argument("unknown method");
}

namespace detail {

inline std::vector<double> log_spaced(double lo, double hi, int count) {
  std::vector<double> out;
  if (count == 1) {
    out.push_back(hi);
    return out;
  }
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < count; ++i)
    out.push_back(std::exp(llo + (lhi - llo) * static_cast<double>(i) / (count - 1)));
  return out;
}

inline Grid stride_sample(Grid full, int target) {
  if (static_cast<int>(full.size()) <= target) return full;
  Grid out;
  out.reserve(static_cast<std::size_t>(target));
  for (int i = 0; i < target; ++i)
    out.push_back(full[static_cast<std::size_t>(static_cast<long long>(i) * full.size() / target)]);
  return out;
}

}  // namespace detail

/// Default grid over [1e-3, 1] * lambda_max with lambda_max = ||A'y||_inf.
/// The primary sparsity axes are log-spaced; the secondary axis (fusion for
/// sglgg/fused, feature sparsity for sparse_group_lasso) runs over
/// {0.1, 1, 10} x the primary value. The full product is strided down to
/// `target_points`.
inline Grid default_grid(Method method, const Dataset& data, int target_points = 100) {
  if (target_points < 1) throw std::invalid_argument("grid must have at least one point");
  const double lambda_max = (data.a.transpose() * data.y).cwiseAbs().maxCoeff();
  const double lo = 1e-3 * lambda_max, hi = lambda_max;
  const std::vector<double> factors{0.1, 1.0, 10.0};
  Grid full;
  switch (method) {
    case Method::lasso: {
      for (double l : detail::log_spaced(lo, hi, target_points)) full.push_back({l, 0, 0});
      return full;
    }
    case Method::fused_lasso:
    case Method::sparse_group_lasso: {
      const int m = std::max(2, static_cast<int>(std::ceil(static_cast<double>(target_points) / 3.0)));
      for (double l : detail::log_spaced(lo, hi, m))
        for (double f : factors) full.push_back({l, f * l, 0});
      return detail::stride_sample(std::move(full), target_points);
    }
    case Method::sglgg: {
      const int m = std::max(2, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(target_points) / 3.0))));
      for (double l1 : detail::log_spaced(lo, hi, m))
        for (double f : factors)
          for (double l3 : detail::log_spaced(lo, hi, m)) full.push_back({l1, f * l1, l3});
      return detail::stride_sample(std::move(full), target_points);
    }
  }
  throw std::invalid_argument("unknown method");
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

struct CvReport {
  int folds = 0;
  int replications = 0;
  Grid grid;
  std::vector<double> mean_mse;  // per grid point, averaged over replications
  std::vector<double> std_mse;   // sample std across replications
  int best_index = 0;
  double null_mse = 0.0;  // constant (training-mean) predictor, same protocol
};

/// Random partition of 0..n-1 into `folds` test folds, each sorted.
inline std::vector<std::vector<int>> cv_folds(Index n, int folds, std::mt19937_64& rng) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<int>> out(static_cast<std::size_t>(folds));
  for (int f = 0; f < folds; ++f) {
    const Index lo = n * f / folds, hi = n * (f + 1) / folds;
    out[static_cast<std::size_t>(f)].assign(perm.begin() + lo, perm.begin() + hi);
    std::sort(out[static_cast<std::size_t>(f)].begin(), out[static_cast<std::size_t>(f)].end());
  }
  return out;
}

namespace detail {

inline Dataset take_rows(const Dataset& data, const std::vector<int>& rows) {
  Dataset out;
  out.a.resize(static_cast<Index>(rows.size()), data.p());
  out.y.resize(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.a.row(static_cast<Index>(i)) = data.a.row(rows[i]);
    out.y[static_cast<Index>(i)] = data.y[rows[i]];
  }
  out.feature_ids = data.feature_ids;
  if (!data.sample_ids.empty())
    for (int r : rows) out.sample_ids.push_back(data.sample_ids[static_cast<std::size_t>(r)]);
  return out;
}

inline std::vector<int> complement(Index n, const std::vector<int>& rows) {
  std::vector<char> in(static_cast<std::size_t>(n), 0);
  for (int r : rows) in[static_cast<std::size_t>(r)] = 1;
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n) - rows.size());
  for (Index i = 0; i < n; ++i)
    if (!in[static_cast<std::size_t>(i)]) out.push_back(static_cast<int>(i));
  return out;
}

}  // namespace detail

/// Five-fold cross-validation, replicated. Each replication re-partitions
/// the samples; each training fold is centered independently and its
/// centering statistics are applied to the held-out fold. Deterministic
/// given the seed, and bit-identical for any thread count.
inline CvReport cross_validate(const Dataset& data, const ModelSpec& spec, const Grid& grid,
                               int folds = 5, int replications = 10, std::uint64_t seed = 0,
                               int threads = 1) {
  validate_dataset(data);
  if (grid.empty()) throw std::invalid_argument("grid must be non-empty");
  if (folds < 2) throw std::invalid_argument("folds must be at least 2");
  if (data.n() < folds)
    throw std::invalid_argument("cannot form " + std::to_string(folds) + " folds from " +
                                std::to_string(data.n()) + " samples");
  if (replications < 1) throw std::invalid_argument("replications must be at least 1");

  const Index n = data.n();
  const int g = static_cast<int>(grid.size());
  std::vector<std::vector<std::vector<int>>> partitions;
  partitions.reserve(static_cast<std::size_t>(replications));
  for (int rep = 0; rep < replications; ++rep) {
    auto rng = rng_for(seed, static_cast<std::uint64_t>(rep));
    partitions.push_back(cv_folds(n, folds, rng));
  }

  const int cells = replications * folds * g;
  std::vector<double> cell_sse(static_cast<std::size_t>(cells), 0.0);
  parallel_for(cells, threads, [&](int cell) {
    const int rep = cell / (folds * g);
    const int fold = (cell / g) % folds;
    const int gi = cell % g;
    const auto& test_rows = partitions[static_cast<std::size_t>(rep)][static_cast<std::size_t>(fold)];
    const auto train_rows = detail::complement(n, test_rows);
    const Dataset train = center_dataset(detail::take_rows(data, train_rows));
    const Dataset test = detail::take_rows(data, test_rows);
    const FitResult fit = fit_model(train, spec, grid[static_cast<std::size_t>(gi)]);
    const VectorXd yhat = predict(fit, test.a);
    cell_sse[static_cast<std::size_t>(cell)] = (test.y - yhat).squaredNorm();
  });

  CvReport report;
  report.folds = folds;
  report.replications = replications;
  report.grid = grid;
  report.mean_mse.assign(static_cast<std::size_t>(g), 0.0);
  report.std_mse.assign(static_cast<std::size_t>(g), 0.0);
  for (int gi = 0; gi < g; ++gi) {
    std::vector<double> per_rep(static_cast<std::size_t>(replications), 0.0);
    for (int rep = 0; rep < replications; ++rep) {
      double sse = 0.0;
      for (int fold = 0; fold < folds; ++fold)
        sse += cell_sse[static_cast<std::size_t>((rep * folds + fold) * g + gi)];
      per_rep[static_cast<std::size_t>(rep)] = sse / static_cast<double>(n);
    }
    double mean = 0.0;
    for (double v : per_rep) mean += v;
    mean /= replications;
    double var = 0.0;
    for (double v : per_rep) var += (v - mean) * (v - mean);
    report.mean_mse[static_cast<std::size_t>(gi)] = mean;
    report.std_mse[static_cast<std::size_t>(gi)] =
        replications > 1 ? std::sqrt(var / (replications - 1)) : 0.0;
  }
  report.best_index = static_cast<int>(std::min_element(report.mean_mse.begin(), report.mean_mse.end()) -
                                       report.mean_mse.begin());

  // null model: predict the training-fold response mean
  double null_total = 0.0;
  for (int rep = 0; rep < replications; ++rep) {
    double sse = 0.0;
    for (int fold = 0; fold < folds; ++fold) {
      const auto& test_rows = partitions[static_cast<std::size_t>(rep)][static_cast<std::size_t>(fold)];
      const auto train_rows = detail::complement(n, test_rows);
      double train_mean = 0.0;
      for (int r : train_rows) train_mean += data.y[r];
      train_mean /= static_cast<double>(train_rows.size());
      for (int r : test_rows) sse += (data.y[r] - train_mean) * (data.y[r] - train_mean);
    }
    null_total += sse / static_cast<double>(n);
  }
  report.null_mse = null_total / replications;
  return report;
}

// ---------------------------------------------------------------------------
// Stability selection
// ---------------------------------------------------------------------------

struct StabilityReport {
  VectorXd frequency;        // per (sim, grid-point) run count / (n_sims * |grid|)
  VectorXd union_frequency;  // per-subsample union: sims with any hit / n_sims
  int n_sims = 0;
  Grid grid;
  std::vector<std::vector<bool>> per_run_selected;  // optional archive, cell-major
};

/// Repeated half-subsampling: each simulation draws floor(n * fraction)
/// subjects without replacement, then fits every grid point on that
/// subsample. frequency[j] counts (sim, grid-point) runs selecting feature
/// j; union_frequency[j] counts simulations with at least one such run.
inline StabilityReport stability_select(const Dataset& data, const ModelSpec& spec, const Grid& grid,
                                        int n_sims = 100, double subsample_fraction = 0.5,
                                        std::uint64_t seed = 0, int threads = 1,
                                        bool keep_archive = false) {
  validate_dataset(data);
  if (grid.empty()) throw std::invalid_argument("grid must be non-empty");
  if (n_sims < 1) throw std::invalid_argument("n_sims must be at least 1");
  if (!(subsample_fraction > 0.0) || subsample_fraction > 1.0)
    throw std::invalid_argument("subsample fraction must be in (0, 1]");
  const Index n = data.n();
  const Index m = static_cast<Index>(std::floor(subsample_fraction * static_cast<double>(n)));
  if (m < 2)
    throw std::invalid_argument("subsample of " + std::to_string(m) + " subjects is degenerate");

  std::vector<std::vector<int>> subsamples;
  subsamples.reserve(static_cast<std::size_t>(n_sims));
  for (int sim = 0; sim < n_sims; ++sim) {
    auto rng = rng_for(seed, static_cast<std::uint64_t>(sim), 1);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    perm.resize(static_cast<std::size_t>(m));
    std::sort(perm.begin(), perm.end());
    subsamples.push_back(std::move(perm));
  }

  const int g = static_cast<int>(grid.size());
  const int cells = n_sims * g;
  const Index p = data.p();
  std::vector<std::vector<int>> cell_selected(static_cast<std::size_t>(cells));
  parallel_for(cells, threads, [&](int cell) {
    const int sim = cell / g;
    const int gi = cell % g;
    const Dataset sub = center_dataset(detail::take_rows(data, subsamples[static_cast<std::size_t>(sim)]));
    const FitResult fit = fit_model(sub, spec, grid[static_cast<std::size_t>(gi)]);
    cell_selected[static_cast<std::size_t>(cell)] = fit.selected;
  });

  StabilityReport report;
  report.n_sims = n_sims;
  report.grid = grid;
  VectorXd counts = VectorXd::Zero(p);
  VectorXd union_counts = VectorXd::Zero(p);
  std::vector<char> seen(static_cast<std::size_t>(p));
  for (int sim = 0; sim < n_sims; ++sim) {
    std::fill(seen.begin(), seen.end(), 0);
    for (int gi = 0; gi < g; ++gi) {
      for (int j : cell_selected[static_cast<std::size_t>(sim * g + gi)]) {
        counts[j] += 1.0;
        seen[static_cast<std::size_t>(j)] = 1;
      }
    }
    for (Index j = 0; j < p; ++j)
      if (seen[static_cast<std::size_t>(j)]) union_counts[j] += 1.0;
  }
  report.frequency = counts / static_cast<double>(n_sims * g);
  report.union_frequency = union_counts / static_cast<double>(n_sims);
  if (keep_archive) {
    report.per_run_selected.resize(static_cast<std::size_t>(cells));
    for (int cell = 0; cell < cells; ++cell) {
      std::vector<bool> row(static_cast<std::size_t>(p), false);
      for (int j : cell_selected[static_cast<std::size_t>(cell)]) row[static_cast<std::size_t>(j)] = true;
      report.per_run_selected[static_cast<std::size_t>(cell)] = std::move(row);
    }
  }
  return report;
}

/// First k features by descending frequency; ties broken by ascending index.
inline std::vector<int> rank_top_k(const StabilityReport& report, int k = 50) {
  const Index p = report.frequency.size();
  if (k < 0 || static_cast<Index>(k) > p)
    throw std::invalid_argument("k = " + std::to_string(k) + " is out of range for " +
                                std::to_string(p) + " features");
  std::vector<int> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (report.frequency[a] != report.frequency[b]) return report.frequency[a] > report.frequency[b];
    return a < b;
  });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

}  // namespace sglgg
