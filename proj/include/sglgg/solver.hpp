#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sglgg/core.hpp"
#include "sglgg/linalg.hpp"

namespace sglgg {

enum class GInit { ones, custom };
enum class SInit { zeros, ridge, custom };

struct AdmmSettings {
  double rho = 1.0;        // dual step length
  int max_iter = 2000;
  double abs_tol = 1e-6;
  double rel_tol = 1e-4;
  bool adaptive_rho = false;
  double cg_rel_tol = 1e-8;
  double select_eps = 1e-6;  // |beta| above this counts as selected
  GInit g_init = GInit::ones;
  SInit s_init = SInit::zeros;
  std::optional<VectorXd> g_init_value;
  std::optional<VectorXd> s_init_value;
};

inline void validate_settings(const AdmmSettings& s) {
  if (!(s.rho > 0)) throw std::invalid_argument("rho must be positive");
  if (s.max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
  if (!(s.abs_tol > 0) || !(s.rel_tol > 0)) throw std::invalid_argument("tolerances must be positive");
  if (!(s.cg_rel_tol > 0)) throw std::invalid_argument("cg_rel_tol must be positive");
  if (!(s.select_eps > 0)) throw std::invalid_argument("select_eps must be positive");
}

/// Primal variables (g, s), slack copies (p over g, q over Tg, r over s) and
/// the corresponding duals (mu, nu, xi).
struct ModelState {
  VectorXd g, s;
  VectorXd p_slack, q_slack, r_slack;
  VectorXd mu, nu, xi;
};

struct ConvergenceInfo {
  double primal_res = 0.0;
  double dual_res = 0.0;
  bool converged = false;
};

struct FitResult {
  VectorXd g, s;    // final group and feature coefficients (thresholded copies)
  VectorXd beta;    // effective coefficients (M^T g) o s
  std::vector<double> objective_trace;
  std::vector<double> primal_residuals;
  std::vector<double> dual_residuals;
  int iterations = 0;
  bool converged = false;
  std::vector<int> selected;  // indices with |beta| > select_eps
  Centering centering;
  std::vector<std::string> warnings;
};

namespace detail {

/// Confirms the dataset is centered and returns the centering statistics
/// (zeros when the data was centered by hand).
inline Centering ensure_centered(const Dataset& data) {
  validate_dataset(data);
  if (data.centering) return *data.centering;
  const VectorXd col_means = data.a.colwise().mean();
  const double y_mean = data.y.mean();
  const double scale = std::max(1.0, std::max(data.a.cwiseAbs().maxCoeff(), data.y.cwiseAbs().maxCoeff()));
  if (col_means.cwiseAbs().maxCoeff() > 1e-8 * scale || std::abs(y_mean) > 1e-8 * scale)
    throw std::invalid_argument("dataset must be centered before fitting (call center_dataset)");
  Centering c;
  c.col_means = VectorXd::Zero(data.p());
  c.y_mean = 0.0;
  return c;
}

/// x -> B'(B x) + rho x + rho T'(T x) with B = A Diag(s) M^T, applied
/// without materializing B.
struct GroupSystemOperator {
  const MatrixXd& a;
  const GroupMap& groups;
  const IncidenceMatrix& t;
  const VectorXd& s;
  double rho;

  Index dim() const { return groups.k(); }
  void apply(const VectorXd& x, VectorXd& out) const {
    const VectorXd sx = s.cwiseProduct(groups.expand(x));
    const VectorXd bx = a * sx;
    out = groups.group_sums(s.cwiseProduct(a.transpose() * bx));
    out += rho * x;
    if (t.rows() > 0) out += rho * (t.transpose() * (t * x)).eval();
  }
};

/// x -> C'(C x) + rho x with C = A Diag(M^T g).
struct FeatureSystemOperator {
  const MatrixXd& a;
  const VectorXd& g_expanded;
  double rho;

  Index dim() const { return a.cols(); }
  void apply(const VectorXd& x, VectorXd& out) const {
    const VectorXd cx = a * g_expanded.cwiseProduct(x);
    out = g_expanded.cwiseProduct(a.transpose() * cx);
    out += rho * x;
  }
};

inline bool state_finite(const ModelState& st) {
  return st.g.allFinite() && st.s.allFinite() && st.p_slack.allFinite() && st.q_slack.allFinite() &&
         st.r_slack.allFinite() && st.mu.allFinite() && st.nu.allFinite() && st.xi.allFinite();
}

}  // namespace detail

/// ADMM solver for the two-level structured sparse regression problem.
///
/// Each iteration runs, in order: the g linear system (CG), the s linear
/// system (CG), the three soft-thresholding slack updates (p, q, r), and the
/// dual ascent steps. The per-step methods are public so each update can be
/// exercised in isolation; fit() composes them with convergence control.
class SglggAdmm {
 public:
  SglggAdmm(const Dataset& data, const GroupMap& groups, const GeneGraph& graph,
            const Penalty& penalty, AdmmSettings settings = {})
      : data_(data),
        groups_(groups),
        penalty_(penalty),
        settings_(std::move(settings)),
        rho_(settings_.rho) {
    validate_settings(settings_);
    if (data.p() != groups.p())
      throw std::invalid_argument("dataset feature count does not match group map");
    if (graph.k != groups.k())
      throw std::invalid_argument("graph node count does not match group count");
    validate_penalty(penalty_, groups_);
    centering_ = detail::ensure_centered(data_);
    t_ = build_incidence(graph, penalty_.edge_weight);
    if (penalty_.lambda1 == 0.0)
      warnings_.push_back(
          "lambda1 = 0 leaves the group gate unpenalized; with lambda2 = 0 (or no edges) the "
          "(g, s) scaling g -> c*g, s -> s/c makes the problem ill-posed");
    initialize();
  }

  void update_g() {
    detail::GroupSystemOperator op{data_.a, groups_, t_, state_.s, rho_};
    VectorXd b = groups_.group_sums(state_.s.cwiseProduct(data_.a.transpose() * data_.y));
    b -= state_.mu;
    b += rho_ * state_.p_slack;
    if (t_.rows() > 0) {
      b -= t_.transpose() * state_.nu;
      b += rho_ * (t_.transpose() * state_.q_slack).eval();
    }
    CgResult sol = cg_solve(op, b, CgSettings{settings_.cg_rel_tol, 0}, &state_.g);
    if (!sol.converged)
      throw SolverError("g-update linear system did not reach tolerance (residual " +
                        std::to_string(sol.residual) + ")");
    state_.g = std::move(sol.x);
  }

  void update_s() {
    const VectorXd g_expanded = groups_.expand(state_.g);
    detail::FeatureSystemOperator op{data_.a, g_expanded, rho_};
    VectorXd b = g_expanded.cwiseProduct(data_.a.transpose() * data_.y);
    b -= state_.xi;
    b += rho_ * state_.r_slack;
    CgResult sol = cg_solve(op, b, CgSettings{settings_.cg_rel_tol, 0}, &state_.s);
    if (!sol.converged)
      throw SolverError("s-update linear system did not reach tolerance (residual " +
                        std::to_string(sol.residual) + ")");
    state_.s = std::move(sol.x);
  }

  void update_p() {
    const VectorXd thresholds = (penalty_.lambda1 / rho_) * penalty_.group_weights;
    state_.p_slack = soft_threshold(state_.g + state_.mu / rho_, thresholds);
  }

  void update_q() {
    if (t_.rows() == 0) return;
    state_.q_slack = soft_threshold(VectorXd(t_ * state_.g) + state_.nu / rho_, penalty_.lambda2 / rho_);
  }

  void update_r() {
    state_.r_slack = soft_threshold(state_.s + state_.xi / rho_, penalty_.lambda3 / rho_);
  }

  void update_duals() {
    state_.mu += rho_ * (state_.g - state_.p_slack);
    if (t_.rows() > 0) state_.nu += rho_ * (VectorXd(t_ * state_.g) - state_.q_slack);
    state_.xi += rho_ * (state_.s - state_.r_slack);
  }

  /// Residual norms after a full iteration. The primal residual stacks the
  /// three constraint gaps; the dual residual maps the slack changes back
  /// through (I, T', I). Convergence requires the stacked test and every
  /// per-block test, each at abs_tol * sqrt(dim) + rel_tol * iterate scale.
  ConvergenceInfo check_convergence() const {
    const Index k = groups_.k();
    const Index p = groups_.p();
    const Index e = t_.rows();

    const VectorXd tg = e > 0 ? VectorXd(t_ * state_.g) : VectorXd(0);
    const VectorXd res_g = state_.g - state_.p_slack;
    const VectorXd res_q = e > 0 ? VectorXd(tg - state_.q_slack) : VectorXd(0);
    const VectorXd res_s = state_.s - state_.r_slack;

    const VectorXd dp = state_.p_slack - prev_p_;
    const VectorXd dq = e > 0 ? VectorXd(state_.q_slack - prev_q_) : VectorXd(0);
    const VectorXd dr = state_.r_slack - prev_r_;
    VectorXd dual_g = rho_ * dp;
    if (e > 0) dual_g += rho_ * (t_.transpose() * dq).eval();
    const VectorXd dual_s = rho_ * dr;

    ConvergenceInfo info;
    info.primal_res = std::sqrt(res_g.squaredNorm() + res_q.squaredNorm() + res_s.squaredNorm());
    info.dual_res = std::sqrt(dual_g.squaredNorm() + dual_s.squaredNorm());

    const double abs_tol = settings_.abs_tol;
    const double rel_tol = settings_.rel_tol;
    auto within = [&](double res, Index dim, double scale) {
      return res <= abs_tol * std::sqrt(static_cast<double>(dim)) + rel_tol * scale;
    };

    const double ax_norm = std::sqrt(state_.g.squaredNorm() + tg.squaredNorm() + state_.s.squaredNorm());
    const double bz_norm = std::sqrt(state_.p_slack.squaredNorm() + state_.q_slack.squaredNorm() +
                                     state_.r_slack.squaredNorm());
    VectorXd mapped_dual_g = state_.mu;
    if (e > 0) mapped_dual_g += (t_.transpose() * state_.nu).eval();
    const double dual_scale = std::sqrt(mapped_dual_g.squaredNorm() + state_.xi.squaredNorm());

    bool ok = within(info.primal_res, k + e + p, std::max(ax_norm, bz_norm)) &&
              within(info.dual_res, k + p, dual_scale);
    // per-constraint gaps relative to their own iterates, so that a reported
    // convergence certifies each block individually
    ok = ok && res_g.norm() <= rel_tol * (1.0 + state_.g.norm());
    if (e > 0) ok = ok && res_q.norm() <= rel_tol * (1.0 + tg.norm());
    ok = ok && res_s.norm() <= rel_tol * (1.0 + state_.s.norm());
    info.converged = ok;
    return info;
  }

  /// One full iteration; records traces. Returns true on convergence.
  bool step() {
    prev_p_ = state_.p_slack;
    prev_q_ = state_.q_slack;
    prev_r_ = state_.r_slack;

    update_g();
    update_s();
    update_p();
    update_q();
    update_r();
    update_duals();

    if (!detail::state_finite(state_))
      throw SolverError("ADMM state diverged to non-finite values; consider a smaller rho or rescaled data");

    const ConvergenceInfo info = check_convergence();
    objective_trace_.push_back(objective(data_, state_.g, state_.s, groups_, t_, penalty_));
    primal_trace_.push_back(info.primal_res);
    dual_trace_.push_back(info.dual_res);

    if (!info.converged && settings_.adaptive_rho) {
      if (info.primal_res > 10.0 * info.dual_res && rho_ < 1e6) {
        rho_ *= 2.0;
      } else if (info.dual_res > 10.0 * info.primal_res && rho_ > 1e-6) {
        rho_ *= 0.5;
      }
    }
    return info.converged;
  }

  FitResult fit() {
    bool converged = false;
    int iter = 0;
    while (iter < settings_.max_iter) {
      ++iter;
      if (step()) {
        converged = true;
        break;
      }
    }

    FitResult result;
    result.g = state_.p_slack;  // thresholded copies: exactly sparse, equal to (g, s) at convergence
    result.s = state_.r_slack;
    result.beta = effective_coefficients(result.g, result.s, groups_);
    result.objective_trace = objective_trace_;
    result.primal_residuals = primal_trace_;
    result.dual_residuals = dual_trace_;
    result.iterations = iter;
    result.converged = converged;
    result.centering = centering_;
    result.warnings = warnings_;
    for (Index j = 0; j < result.beta.size(); ++j)
      if (std::abs(result.beta[j]) > settings_.select_eps) result.selected.push_back(static_cast<int>(j));
    return result;
  }

  ModelState& state() { return state_; }
  const ModelState& state() const { return state_; }
  const IncidenceMatrix& incidence() const { return t_; }
  double rho() const { return rho_; }
  const Penalty& penalty() const { return penalty_; }
  /// T g for the current gate (empty when the graph has no edges).
  VectorXd current_tg() const { return t_.rows() > 0 ? VectorXd(t_ * state_.g) : VectorXd(0); }

 private:
  void initialize() {
    const Index k = groups_.k();
    const Index p = groups_.p();
    if (settings_.g_init == GInit::custom) {
      if (!settings_.g_init_value || settings_.g_init_value->size() != k)
        throw std::invalid_argument("custom g initialization requires a length-K vector");
      state_.g = *settings_.g_init_value;
    } else {
      state_.g = VectorXd::Ones(k);
    }
    if (settings_.s_init == SInit::custom) {
      if (!settings_.s_init_value || settings_.s_init_value->size() != p)
        throw std::invalid_argument("custom s initialization requires a length-p vector");
      state_.s = *settings_.s_init_value;
    } else if (settings_.s_init == SInit::ridge) {
      // ridge warm start against the plain design: (A'A + I) s = A'y
      ones_p_cache_ = VectorXd::Ones(p);
      detail::FeatureSystemOperator op{data_.a, ones_p_cache_, 1.0};
      CgResult sol = cg_solve(op, VectorXd(data_.a.transpose() * data_.y),
                              CgSettings{settings_.cg_rel_tol, 0});
      state_.s = std::move(sol.x);
    } else {
      state_.s = VectorXd::Zero(p);
    }
    if (!state_.g.allFinite() || !state_.s.allFinite())
      throw std::invalid_argument("initial (g, s) must be finite");

    state_.p_slack = state_.g;
    state_.q_slack = current_tg();
    state_.r_slack = state_.s;
    state_.mu = VectorXd::Zero(k);
    state_.nu = VectorXd::Zero(t_.rows());
    state_.xi = VectorXd::Zero(p);
    prev_p_ = state_.p_slack;
    prev_q_ = state_.q_slack;
    prev_r_ = state_.r_slack;
  }

  const Dataset& data_;
  const GroupMap& groups_;
  Penalty penalty_;
  AdmmSettings settings_;
  IncidenceMatrix t_;
  Centering centering_;
  double rho_;
  ModelState state_;
  VectorXd prev_p_, prev_q_, prev_r_;
  VectorXd ones_p_cache_;
  std::vector<double> objective_trace_, primal_trace_, dual_trace_;
  std::vector<std::string> warnings_;
};

/// Runs the full ADMM loop on a centered dataset.
inline FitResult fit_sglgg(const Dataset& data, const GroupMap& groups, const GeneGraph& graph,
                           const Penalty& penalty, const AdmmSettings& settings = {}) {
  SglggAdmm solver(data, groups, graph, penalty, settings);
  return solver.fit();
}

/// yhat = (new_a - training column means) * beta + training response mean.
inline VectorXd predict(const VectorXd& beta, const MatrixXd& new_a, const Centering& centering) {
  if (new_a.cols() != beta.size())
    throw std::invalid_argument("prediction matrix has " + std::to_string(new_a.cols()) +
                                " columns, expected " + std::to_string(beta.size()));
  if (centering.col_means.size() != beta.size())
    throw std::invalid_argument("centering statistics do not match coefficient length");
  VectorXd yhat = new_a * beta;
  yhat.array() += centering.y_mean - centering.col_means.dot(beta);
  return yhat;
}

inline VectorXd predict(const FitResult& fit, const MatrixXd& new_a) {
  return predict(fit.beta, new_a, fit.centering);
}

}  // namespace sglgg
