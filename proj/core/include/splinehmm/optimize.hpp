#pragma once

#include <Eigen/Dense>
#include <functional>

#include "splinehmm/model.hpp"

namespace splinehmm {

struct OptimOptions {
  int max_iter = 500;
  // Converged when ||grad||_2 <= grad_tol * max(1, |value|).
  double grad_tol = 1e-5;
  bool use_lbfgs = false;
  int lbfgs_memory = 20;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int max_line_iter = 60;
};

struct OptimResult {
  Eigen::VectorXd theta;
  double value = 0.0;
  Eigen::VectorXd grad;
  int n_iter = 0;
  int n_eval = 0;
  bool converged = false;
  Eigen::MatrixXd inv_hessian;  // empty when L-BFGS is used
};

// Returns the objective value and fills grad; must stay finite (use a barrier
// for invalid regions).
using Objective =
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// Quasi-Newton minimization with a strong-Wolfe line search.  H0, when given
// and of matching size, seeds the inverse Hessian approximation.
OptimResult minimize(const Objective& f, const Eigen::VectorXd& theta0,
                     const OptimOptions& opt = {},
                     const Eigen::MatrixXd* H0 = nullptr);

struct PenalizedFit {
  Eigen::VectorXd theta;
  double pnll = 0.0;  // penalized objective at theta
  double nll = 0.0;   // unpenalized part
  Eigen::VectorXd grad;
  int n_iter = 0;
  int n_eval = 0;
  bool converged = false;
  Eigen::MatrixXd inv_hessian;
};

// Inner step of the smoothness iteration: minimize the penalized negative
// log likelihood at fixed lambda.
PenalizedFit fit_penalized(const CompiledModel& model,
                           const Eigen::VectorXd& lambda,
                           const Eigen::VectorXd& theta0,
                           const OptimOptions& opt = {},
                           const Eigen::MatrixXd* H0 = nullptr);

// Observed information of the unpenalized fit: symmetrized forward
// differences of the analytic gradient.
Eigen::MatrixXd unpenalized_hessian_fd(const CompiledModel& model,
                                       const Eigen::VectorXd& theta);

// J_p = J_unpen + blockdiag(0, lambda_i S_i).  Passing a precomputed J_unpen
// skips the finite differencing.
Eigen::MatrixXd penalized_hessian(const CompiledModel& model,
                                  const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& lambda,
                                  const Eigen::MatrixXd* J_unpen = nullptr);

}  // namespace splinehmm
