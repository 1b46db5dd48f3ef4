#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sglgg/core.hpp"
#include "sglgg/linalg.hpp"
#include "sglgg/solver.hpp"

namespace sglgg {

namespace detail {

/// x -> A'(A x) + rho x.
struct RidgeOperator {
  const MatrixXd& a;
  double rho;
  Index dim() const { return a.cols(); }
  void apply(const VectorXd& x, VectorXd& out) const {
    out = a.transpose() * (a * x);
    out += rho * x;
  }
};

/// x -> A'(A x) + rho x + rho D'(D x), D the chain difference matrix.
struct RidgeChainOperator {
  const MatrixXd& a;
  const IncidenceMatrix& d;
  double rho;
  Index dim() const { return a.cols(); }
  void apply(const VectorXd& x, VectorXd& out) const {
    out = a.transpose() * (a * x);
    out += rho * x;
    if (d.rows() > 0) out += rho * (d.transpose() * (d * x)).eval();
  }
};

/// Two-block consensus ADMM for 1/2 ||y - A beta||^2 + penalty(beta) where
/// the penalty's scaled proximal map has a closed form. `prox(v, inv_rho)`
/// must return argmin_z penalty(z)/rho + 1/2 ||z - v||^2.
template <typename Prox, typename PenaltyValue>
inline FitResult prox_consensus_fit(const Dataset& data, Prox prox, PenaltyValue penalty_value,
                                    const AdmmSettings& settings) {
  validate_settings(settings);
  const Centering centering = ensure_centered(data);
  const Index p = data.p();
  const double rho = settings.rho;

  VectorXd beta = VectorXd::Zero(p);
  VectorXd z = VectorXd::Zero(p);
  VectorXd u = VectorXd::Zero(p);
  const VectorXd aty = data.a.transpose() * data.y;
  RidgeOperator op{data.a, rho};

  FitResult result;
  result.centering = centering;
  bool converged = false;
  int iter = 0;
  while (iter < settings.max_iter) {
    ++iter;
    VectorXd b = aty - u + rho * z;
    CgResult sol = cg_solve(op, b, CgSettings{settings.cg_rel_tol, 0}, &beta);
    if (!sol.converged)
      throw SolverError("coefficient update did not reach CG tolerance (residual " +
                        std::to_string(sol.residual) + ")");
    beta = std::move(sol.x);

    const VectorXd z_prev = z;
    z = prox(VectorXd(beta + u / rho), 1.0 / rho);
    u += rho * (beta - z);
    if (!beta.allFinite() || !z.allFinite() || !u.allFinite())
      throw SolverError("ADMM state diverged to non-finite values");

    const double primal = (beta - z).norm();
    const double dual = rho * (z - z_prev).norm();
    const VectorXd resid = data.y - data.a * z;
    result.objective_trace.push_back(0.5 * resid.squaredNorm() + penalty_value(z));
    result.primal_residuals.push_back(primal);
    result.dual_residuals.push_back(dual);

    const double sp = std::sqrt(static_cast<double>(p));
    if (primal <= settings.abs_tol * sp + settings.rel_tol * std::max(beta.norm(), z.norm()) &&
        dual <= settings.abs_tol * sp + settings.rel_tol * u.norm()) {
      converged = true;
      break;
    }
  }

  result.beta = z;
  result.s = z;
  result.g = VectorXd(0);
  result.iterations = iter;
  result.converged = converged;
  for (Index j = 0; j < p; ++j)
    if (std::abs(result.beta[j]) > settings.select_eps) result.selected.push_back(static_cast<int>(j));
  return result;
}

}  // namespace detail

/// Lasso: 1/2 ||y - A beta||^2 + lambda ||beta||_1, two-block ADMM with a
/// conjugate-gradient ridge step and a soft-threshold slack step.
inline FitResult lasso_fit(const Dataset& data, double lambda, const AdmmSettings& settings = {}) {
  if (lambda < 0) throw std::invalid_argument("lambda must be non-negative");
  auto prox = [lambda](const VectorXd& v, double inv_rho) {
    return soft_threshold(v, lambda * inv_rho);
  };
  auto value = [lambda](const VectorXd& beta) { return lambda * beta.cwiseAbs().sum(); };
  return detail::prox_consensus_fit(data, prox, value, settings);
}

/// Sparse group lasso: 1/2 ||y - A beta||^2 + lambda_group sum_k sqrt(p_k)
/// ||beta_k||_2 + lambda_feature ||beta||_1. The slack step composes the
/// elementwise soft-threshold with the per-group vector shrink, which is the
/// exact proximal map of the combined penalty.
inline FitResult sparse_group_lasso_fit(const Dataset& data, const GroupMap& groups,
                                        double lambda_group, double lambda_feature,
                                        const AdmmSettings& settings = {}) {
  if (lambda_group < 0 || lambda_feature < 0)
    throw std::invalid_argument("lambdas must be non-negative");
  if (groups.p() != data.p())
    throw std::invalid_argument("group map feature count does not match dataset");
  const VectorXd group_weights = default_group_weights(groups);

  auto prox = [&, lambda_group, lambda_feature](const VectorXd& v, double inv_rho) {
    VectorXd z = lambda_feature > 0 ? soft_threshold(v, lambda_feature * inv_rho) : v;
    if (lambda_group > 0) {
      for (int k = 0; k < groups.k(); ++k) {
        const auto& idx = groups.members()[static_cast<std::size_t>(k)];
        VectorXd block(idx.size());
        for (std::size_t t = 0; t < idx.size(); ++t) block[static_cast<Index>(t)] = z[idx[t]];
        block = group_soft_threshold(block, lambda_group * group_weights[k] * inv_rho);
        for (std::size_t t = 0; t < idx.size(); ++t) z[idx[t]] = block[static_cast<Index>(t)];
      }
    }
    return z;
  };
  auto value = [&, lambda_group, lambda_feature](const VectorXd& beta) {
    double v = lambda_feature * beta.cwiseAbs().sum();
    if (lambda_group > 0) {
      for (int k = 0; k < groups.k(); ++k) {
        double sq = 0;
        for (int j : groups.members()[static_cast<std::size_t>(k)]) sq += beta[j] * beta[j];
        v += lambda_group * group_weights[k] * std::sqrt(sq);
      }
    }
    return v;
  };
  return detail::prox_consensus_fit(data, prox, value, settings);
}

/// Chain difference matrix over feature order: row j maps beta to
/// beta_j - beta_{j+1}. Reuses the graph incidence construction with a chain
/// of unit-weight edges.
inline IncidenceMatrix chain_difference_matrix(Index p) {
  GeneGraph chain = GeneGraph::empty(static_cast<int>(p));
  for (Index j = 0; j + 1 < p; ++j) chain.add_edge(static_cast<int>(j), static_cast<int>(j) + 1, 1.0);
  return build_incidence(chain, EdgeWeightFn::unit());
}

/// Fused lasso over the input feature order: 1/2 ||y - A beta||^2 +
/// lambda_sparse ||beta||_1 + lambda_fuse sum_j |beta_{j+1} - beta_j|.
/// Three-block ADMM with slacks over beta and over the chain differences.
inline FitResult fused_lasso_fit(const Dataset& data, double lambda_sparse, double lambda_fuse,
                                 const AdmmSettings& settings = {}) {
  if (lambda_sparse < 0 || lambda_fuse < 0) throw std::invalid_argument("lambdas must be non-negative");
  validate_settings(settings);
  const Centering centering = detail::ensure_centered(data);
  const Index p = data.p();
  const double rho = settings.rho;
  const IncidenceMatrix d = chain_difference_matrix(p);
  const Index e = d.rows();

  VectorXd beta = VectorXd::Zero(p);
  VectorXd z = VectorXd::Zero(p);      // slack over beta
  VectorXd w = VectorXd::Zero(e);      // slack over D beta
  VectorXd u1 = VectorXd::Zero(p);
  VectorXd u2 = VectorXd::Zero(e);
  const VectorXd aty = data.a.transpose() * data.y;
  detail::RidgeChainOperator op{data.a, d, rho};

  FitResult result;
  result.centering = centering;
  bool converged = false;
  int iter = 0;
  while (iter < settings.max_iter) {
    ++iter;
    VectorXd b = aty - u1 + rho * z;
    if (e > 0) b += (d.transpose() * (rho * w - u2)).eval();
    CgResult sol = cg_solve(op, b, CgSettings{settings.cg_rel_tol, 0}, &beta);
    if (!sol.converged)
      throw SolverError("coefficient update did not reach CG tolerance (residual " +
                        std::to_string(sol.residual) + ")");
    beta = std::move(sol.x);
    const VectorXd dbeta = e > 0 ? VectorXd(d * beta) : VectorXd(0);

    const VectorXd z_prev = z;
    const VectorXd w_prev = w;
    z = soft_threshold(VectorXd(beta + u1 / rho), lambda_sparse / rho);
    if (e > 0) w = soft_threshold(VectorXd(dbeta + u2 / rho), lambda_fuse / rho);
    u1 += rho * (beta - z);
    if (e > 0) u2 += rho * (dbeta - w);
    if (!beta.allFinite() || !z.allFinite() || !w.allFinite() || !u1.allFinite() || !u2.allFinite())
      throw SolverError("ADMM state diverged to non-finite values");

    const double primal = std::sqrt((beta - z).squaredNorm() + (dbeta - w).squaredNorm());
    VectorXd dual_vec = rho * (z - z_prev);
    if (e > 0) dual_vec += rho * (d.transpose() * (w - w_prev)).eval();
    const double dual = dual_vec.norm();

    const VectorXd resid = data.y - data.a * z;
    double obj = 0.5 * resid.squaredNorm() + lambda_sparse * z.cwiseAbs().sum();
    if (e > 0) obj += lambda_fuse * (d * z).cwiseAbs().sum();
    result.objective_trace.push_back(obj);
    result.primal_residuals.push_back(primal);
    result.dual_residuals.push_back(dual);

    VectorXd mapped_dual = u1;
    if (e > 0) mapped_dual += (d.transpose() * u2).eval();
    const double primal_scale =
        std::max(std::sqrt(beta.squaredNorm() + dbeta.squaredNorm()),
                 std::sqrt(z.squaredNorm() + w.squaredNorm()));
    if (primal <= settings.abs_tol * std::sqrt(static_cast<double>(p + e)) +
                      settings.rel_tol * primal_scale &&
        dual <= settings.abs_tol * std::sqrt(static_cast<double>(p)) +
                    settings.rel_tol * mapped_dual.norm()) {
      converged = true;
      break;
    }
  }

  result.beta = z;
  result.s = z;
  result.g = VectorXd(0);
  result.iterations = iter;
  result.converged = converged;
  for (Index j = 0; j < p; ++j)
    if (std::abs(result.beta[j]) > settings.select_eps) result.selected.push_back(static_cast<int>(j));
  return result;
}

}  // namespace sglgg
