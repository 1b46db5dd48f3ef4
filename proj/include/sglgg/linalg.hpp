#pragma once

#include <cmath>
#include <concepts>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "sglgg/core.hpp"

namespace sglgg {

/// Anything that can apply a symmetric positive definite map of fixed
/// dimension. Symmetry and positive definiteness are caller contracts.
template <typename Op>
concept LinearOperator = requires(const Op& op, const VectorXd& v, VectorXd& out) {
  { op.dim() } -> std::convertible_to<Index>;
  { op.apply(v, out) };
};

struct CgSettings {
  double rel_tol = 1e-8;  // on the residual norm relative to ||b||
  int max_iter = 0;       // 0 means 10 * dim
};

struct CgResult {
  VectorXd x;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Conjugate gradient for op(x) = b. Returns once ||op(x) - b|| <= rel_tol *
/// ||b||, or after max_iter with the best iterate seen and converged = false.
/// The residual is recomputed from scratch every 50 iterations to control
/// accumulation drift. Non-finite values mid-iteration signal a non-SPD
/// operator or overflow and raise SolverError.
template <typename Op>
  requires LinearOperator<Op>
inline CgResult cg_solve(const Op& op, const VectorXd& b, const CgSettings& settings = {},
                         const VectorXd* warm_start = nullptr) {
  const Index n = op.dim();
  if (b.size() != n) throw std::invalid_argument("right-hand side length does not match operator dimension");
  if (!(settings.rel_tol > 0)) throw std::invalid_argument("cg rel_tol must be positive");

  CgResult result;
  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    result.x = VectorXd::Zero(n);
    result.converged = true;
    return result;
  }
  const double tol = settings.rel_tol * b_norm;
  const int max_iter = settings.max_iter > 0 ? settings.max_iter : static_cast<int>(10 * n);

  VectorXd x = (warm_start != nullptr && warm_start->size() == n) ? *warm_start : VectorXd::Zero(n);
  VectorXd ax(n);
  op.apply(x, ax);
  VectorXd r = b - ax;
  VectorXd p = r;
  VectorXd ap(n);
  double rr = r.squaredNorm();
  if (!std::isfinite(rr)) throw SolverError("conjugate gradient: non-finite initial residual");

  VectorXd best_x = x;
  double best_res = std::sqrt(rr);

  int iter = 0;
  while (std::sqrt(rr) > tol && iter < max_iter) {
    op.apply(p, ap);
    const double p_ap = p.dot(ap);
    if (!std::isfinite(p_ap) || p_ap <= 0.0)
      throw SolverError("conjugate gradient: operator is not positive definite (p'Ap = " +
                        std::to_string(p_ap) + ")");
    const double alpha = rr / p_ap;
    x += alpha * p;
    ++iter;
    if (iter % 50 == 0) {
      op.apply(x, ax);
      r = b - ax;
    } else {
      r -= alpha * ap;
    }
    const double rr_new = r.squaredNorm();
    if (!std::isfinite(rr_new)) throw SolverError("conjugate gradient: non-finite residual at iteration " +
                                                  std::to_string(iter));
    if (std::sqrt(rr_new) < best_res) {
      best_res = std::sqrt(rr_new);
      best_x = x;
    }
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }

  result.iterations = iter;
  if (std::sqrt(rr) <= tol) {
    result.x = std::move(x);
    result.converged = true;
  } else {
    result.x = std::move(best_x);
    result.converged = false;
  }
  // honest final residual, independent of the recurrence
  op.apply(result.x, ax);
  result.residual = (b - ax).norm();
  return result;
}

/// Wraps a dense symmetric matrix as a LinearOperator.
struct DenseOperator {
  const MatrixXd& m;
  Index dim() const { return m.rows(); }
  void apply(const VectorXd& v, VectorXd& out) const { out.noalias() = m * v; }
};

// ---------------------------------------------------------------------------
// Proximal operators
// ---------------------------------------------------------------------------

/// S_t(x) = sign(x) * max(|x| - t, 0).
inline double soft_threshold(double x, double threshold) {
  if (threshold < 0) throw std::invalid_argument("soft-threshold level must be non-negative");
  if (x > threshold) return x - threshold;
  if (x < -threshold) return x + threshold;
  return 0.0;
}

inline VectorXd soft_threshold(const VectorXd& v, double threshold) {
  if (threshold < 0) throw std::invalid_argument("soft-threshold level must be non-negative");
  VectorXd out(v.size());
  for (Index i = 0; i < v.size(); ++i) out[i] = soft_threshold(v[i], threshold);
  return out;
}

/// Per-coordinate thresholds.
inline VectorXd soft_threshold(const VectorXd& v, const VectorXd& thresholds) {
  if (thresholds.size() != v.size())
    throw std::invalid_argument("threshold vector length does not match input length");
  VectorXd out(v.size());
  for (Index i = 0; i < v.size(); ++i) out[i] = soft_threshold(v[i], thresholds[i]);
  return out;
}

/// Proximal operator of t * ||.||_2: shrinks the whole vector toward zero,
/// reaching exactly zero when ||v|| <= t.
inline VectorXd group_soft_threshold(const VectorXd& v, double threshold) {
  if (threshold < 0) throw std::invalid_argument("group soft-threshold level must be non-negative");
  if (threshold == 0.0) return v;
  const double norm = v.norm();
  if (norm <= threshold) return VectorXd::Zero(v.size());
  return v * (1.0 - threshold / norm);
}

}  // namespace sglgg
