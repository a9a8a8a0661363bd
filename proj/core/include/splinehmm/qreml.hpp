#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "splinehmm/optimize.hpp"
#include "splinehmm/rng.hpp"

namespace splinehmm {

struct QremlOptions {
  // Outer convergence: largest relative smoothing-parameter change.  The
  // simulation study tightens this to 1e-5 to hit its iteration targets.
  double tol = 1e-4;
  int max_outer = 100;
  double lambda_lo = 1e-8;
  double lambda_hi = 1e12;
  OptimOptions inner;
};

struct QremlTraceRow {
  int outer = 0;  // 1-based; the polish row repeats the last index
  Eigen::VectorXd lambda;
  double pnll = 0.0;
  double nll = 0.0;
  int inner_iters = 0;
  bool inner_converged = false;
  double max_rel_change = 0.0;  // zero on the polish row
  bool polish = false;
};

// edf_i = K_i - m_i - lambda_i * tr((J_p^{-1})_ii S_i): the effective number
// of penalized coefficients of one smooth.
double effective_df_component(int K, int m, double lambda, double tr_JinvS);

// lambda' = edf / (b'Sb), clamped to [lo, hi].  A vanishing quadratic form
// (< 1e-12, the coefficient vector sits in the penalty nullspace) maps to
// the upper bound; a negative numerator maps to the lower bound.
double lambda_update_component(double edf, double quad, double lo, double hi);

struct BlockPenalty {
  int offset = 0;
  Eigen::MatrixXd S;
  int nullspace_dim = 0;
};

struct LambdaUpdate {
  Eigen::VectorXd lambda;
  Eigen::VectorXd edf;
};

// One qREML update for every penalized block given the penalized curvature
// J_p at the current fit and quad_i = b_i' S_i b_i.
LambdaUpdate qreml_update(const Eigen::MatrixXd& J_p,
                          const std::vector<BlockPenalty>& blocks,
                          const Eigen::VectorXd& lambda,
                          const Eigen::VectorXd& quad, double lo, double hi);

struct QremlFit {
  Eigen::VectorXd theta;
  Eigen::VectorXd lambda;
  double nll = 0.0;
  double pnll = 0.0;
  int n_outer = 0;       // smoothing-update cycles (the polish fit excluded)
  bool converged = false;
  Eigen::VectorXd edf;   // per smooth, at the final fit
  double total_df = 0.0; // fixed effects + nullspaces + summed edf
  double caic = 0.0;
  double cbic = 0.0;
  Eigen::MatrixXd J_p;
  Eigen::MatrixXd J_unpen;
  std::optional<double> marginal_loglik;  // diagnostic, null when J_p fails
  std::vector<QremlTraceRow> trace;
  int n_eval = 0;
};

// Full smoothness-selection iteration: alternate penalized fits with the
// qREML smoothing-parameter update until the largest relative change falls
// below tol, then refit once at the selected values.
QremlFit qreml_fit(const CompiledModel& model, const Eigen::VectorXd& theta0,
                   const Eigen::VectorXd& lambda0, const QremlOptions& opt = {});

// Draws from N(theta, J_p^{-1}) for conditional uncertainty bands; one draw
// per row.  A non-positive-definite J_p gets an escalating ridge first.
Eigen::MatrixXd sample_conditional(const Eigen::VectorXd& theta,
                                   const Eigen::MatrixXd& J_p, int n_draws,
                                   Rng& rng);

// Laplace approximation to the log marginal likelihood at the fit, up to an
// additive constant; the determinant is restricted to the fixed effects and
// the penalized eigendirections.  Empty when that restriction of J_p is not
// positive definite.
std::optional<double> marginal_loglik_approx(const CompiledModel& model,
                                             const Eigen::VectorXd& theta,
                                             const Eigen::VectorXd& lambda,
                                             const Eigen::MatrixXd& J_p);

}  // namespace splinehmm
