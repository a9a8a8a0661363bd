#include "splinehmm/qreml.hpp"

#include <cmath>
#include <limits>

#include "splinehmm/errors.hpp"

namespace splinehmm {

namespace {

Eigen::MatrixXd symmetric_inverse(const Eigen::MatrixXd& A) {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  Eigen::MatrixXd inv;
  if (ldlt.info() == Eigen::Success) {
    inv = ldlt.solve(I);
    if (inv.allFinite()) return inv;
  }
  inv = A.partialPivLu().solve(I);
  if (!inv.allFinite())
    throw NumericalError("penalized information matrix is singular");
  return inv;
}

}  // namespace

double effective_df_component(int K, int m, double lambda, double tr_JinvS) {
  return static_cast<double>(K) - static_cast<double>(m) - lambda * tr_JinvS;
}

double lambda_update_component(double edf, double quad, double lo, double hi) {
  if (!(quad >= 1e-12)) return hi;  // fully smooth: b in the penalty nullspace
  if (edf < 0.0) return lo;         // wiggly limit
  const double raw = edf / quad;
  if (!std::isfinite(raw)) return hi;
  return std::min(std::max(raw, lo), hi);
}

namespace {

// tr((J_p^{-1})_ii S_i) per block.  Small systems invert densely; large ones
// solve against each block's unit vectors instead.
Eigen::VectorXd block_inverse_traces(const Eigen::MatrixXd& J_p,
                                     const std::vector<BlockPenalty>& blocks) {
  const auto p = static_cast<Eigen::Index>(blocks.size());
  Eigen::VectorXd tr(p);
  if (J_p.rows() <= 300) {
    const Eigen::MatrixXd Jinv = symmetric_inverse(J_p);
    for (Eigen::Index q = 0; q < p; ++q) {
      const BlockPenalty& b = blocks[q];
      const int K = static_cast<int>(b.S.rows());
      tr[q] = Jinv.block(b.offset, b.offset, K, K).cwiseProduct(b.S).sum();
    }
    return tr;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(J_p);
  const bool ldlt_ok = ldlt.info() == Eigen::Success;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  if (!ldlt_ok) lu.compute(J_p);
  for (Eigen::Index q = 0; q < p; ++q) {
    const BlockPenalty& b = blocks[q];
    const int K = static_cast<int>(b.S.rows());
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(J_p.rows(), K);
    for (int k = 0; k < K; ++k) E(b.offset + k, k) = 1.0;
    const Eigen::MatrixXd X =
        ldlt_ok ? Eigen::MatrixXd(ldlt.solve(E)) : Eigen::MatrixXd(lu.solve(E));
    if (!X.allFinite())
      throw NumericalError("penalized information matrix is singular");
    tr[q] = X.middleRows(b.offset, K).cwiseProduct(b.S).sum();
  }
  return tr;
}

}  // namespace

LambdaUpdate qreml_update(const Eigen::MatrixXd& J_p,
                          const std::vector<BlockPenalty>& blocks,
                          const Eigen::VectorXd& lambda,
                          const Eigen::VectorXd& quad, double lo, double hi) {
  const auto p = static_cast<Eigen::Index>(blocks.size());
  if (lambda.size() != p || quad.size() != p)
    throw ArgumentError("qreml_update needs one lambda and one quadratic form "
                        "per block");
  const Eigen::VectorXd tr = block_inverse_traces(J_p, blocks);
  LambdaUpdate out;
  out.lambda.resize(p);
  out.edf.resize(p);
  for (Eigen::Index q = 0; q < p; ++q) {
    const BlockPenalty& b = blocks[q];
    const int K = static_cast<int>(b.S.rows());
    out.edf[q] = effective_df_component(K, b.nullspace_dim, lambda[q], tr[q]);
    out.lambda[q] = lambda_update_component(out.edf[q], quad[q], lo, hi);
  }
  return out;
}

QremlFit qreml_fit(const CompiledModel& model, const Eigen::VectorXd& theta0,
                   const Eigen::VectorXd& lambda0, const QremlOptions& opt) {
  const auto p = static_cast<Eigen::Index>(model.smooths().size());
  if (lambda0.size() != p)
    throw ArgumentError("one starting smoothing parameter per smooth is "
                        "required");
  if (opt.max_outer < 1) throw ArgumentError("max_outer must be at least one");

  std::vector<BlockPenalty> blocks;
  blocks.reserve(p);
  for (Eigen::Index q = 0; q < p; ++q) {
    BlockPenalty b;
    b.offset = model.layout().blocks[q].offset;
    b.S = model.smooths()[q].term.S;
    b.nullspace_dim = model.smooths()[q].term.nullspace_dim;
    blocks.push_back(std::move(b));
  }

  QremlFit out;
  Eigen::VectorXd lambda =
      lambda0.cwiseMax(opt.lambda_lo).cwiseMin(opt.lambda_hi);
  Eigen::VectorXd prev_lambda = lambda;
  Eigen::VectorXd theta = theta0;

  // J_unpen is reused when theta is bitwise unchanged (warm polish fits).
  Eigen::VectorXd Jun_theta;
  Eigen::MatrixXd Jun;
  auto hessian_at = [&](const Eigen::VectorXd& th) -> const Eigen::MatrixXd& {
    if (Jun_theta.size() == th.size() &&
        (Jun_theta.array() == th.array()).all())
      return Jun;
    Jun = unpenalized_hessian_fd(model, th);
    Jun_theta = th;
    return Jun;
  };

  // Only theta is warm-started across outer iterations; the quasi-Newton
  // curvature state is rebuilt per fit because the penalized surface changes
  // with lambda.
  bool outer_converged = p == 0;
  for (int k = 1; k <= opt.max_outer; ++k) {
    PenalizedFit fit;
    try {
      fit = fit_penalized(model, lambda, theta, opt.inner);
    } catch (const NumericalError& e) {
      throw NumericalError("outer iteration " + std::to_string(k) + ": " +
                           e.what());
    }
    out.n_eval += fit.n_eval;
    theta = fit.theta;
    out.n_outer = k;

    QremlTraceRow row;
    row.outer = k;
    row.lambda = lambda;
    row.pnll = fit.pnll;
    row.nll = fit.nll;
    row.inner_iters = fit.n_iter;
    row.inner_converged = fit.converged;

    if (p == 0) {
      out.trace.push_back(std::move(row));
      break;
    }

    const Eigen::MatrixXd J_p =
        penalized_hessian(model, theta, lambda, &hessian_at(theta));
    const LambdaUpdate upd = qreml_update(
        J_p, blocks, lambda, model.penalty_quad_forms(theta), opt.lambda_lo,
        opt.lambda_hi);
    // The raw update can settle into a two-cycle.  A direction reversal in
    // log-lambda takes the midpoint of the proposed jump instead; monotone
    // trajectories are never altered.
    Eigen::VectorXd next = upd.lambda;
    if (k >= 2) {
      for (Eigen::Index q = 0; q < p; ++q) {
        const double step = std::log(next[q]) - std::log(lambda[q]);
        const double last = std::log(lambda[q]) - std::log(prev_lambda[q]);
        if (step * last < 0.0 && std::abs(step) > opt.tol)
          next[q] = std::sqrt(next[q] * lambda[q]);
      }
    }
    double rel = 0.0;
    for (Eigen::Index q = 0; q < p; ++q)
      rel = std::max(rel, std::abs(next[q] - lambda[q]) / lambda[q]);
    row.max_rel_change = rel;
    out.trace.push_back(std::move(row));
    prev_lambda = lambda;
    lambda = next;
    if (rel < opt.tol) {
      outer_converged = true;
      break;
    }
  }

  // Refit once at the selected smoothing parameters so every reported
  // quantity belongs to the same fit.
  PenalizedFit final_fit = fit_penalized(model, lambda, theta, opt.inner);
  out.n_eval += final_fit.n_eval;
  theta = final_fit.theta;
  if (p > 0) {
    QremlTraceRow row;
    row.outer = out.n_outer;
    row.lambda = lambda;
    row.pnll = final_fit.pnll;
    row.nll = final_fit.nll;
    row.inner_iters = final_fit.n_iter;
    row.inner_converged = final_fit.converged;
    row.polish = true;
    out.trace.push_back(std::move(row));
  }

  out.theta = theta;
  out.lambda = lambda;
  out.nll = final_fit.nll;
  out.pnll = final_fit.pnll;
  // Convergence is a statement about the smoothing-parameter iteration; the
  // per-fit optimizer status stays visible in the trace rows.
  out.converged = outer_converged;
  out.J_unpen = hessian_at(theta);
  out.J_p = penalized_hessian(model, theta, lambda, &out.J_unpen);

  out.edf.resize(p);
  double total = model.layout().n_fixed;
  if (p > 0) {
    const Eigen::VectorXd tr = block_inverse_traces(out.J_p, blocks);
    for (Eigen::Index q = 0; q < p; ++q) {
      const BlockPenalty& b = blocks[q];
      const int K = static_cast<int>(b.S.rows());
      out.edf[q] =
          effective_df_component(K, b.nullspace_dim, lambda[q], tr[q]);
      total += out.edf[q] + b.nullspace_dim;
    }
  }
  out.total_df = total;
  out.caic = 2.0 * out.nll + 2.0 * out.total_df;
  out.cbic = 2.0 * out.nll + std::log(static_cast<double>(model.T())) *
                                 out.total_df;
  out.marginal_loglik =
      marginal_loglik_approx(model, theta, lambda, out.J_p);
  return out;
}

Eigen::MatrixXd sample_conditional(const Eigen::VectorXd& theta,
                                   const Eigen::MatrixXd& J_p, int n_draws,
                                   Rng& rng) {
  if (n_draws < 0) throw ArgumentError("the number of draws must be >= 0");
  const int n = static_cast<int>(theta.size());
  if (J_p.rows() != n || J_p.cols() != n)
    throw ArgumentError("J_p and theta dimensions disagree");
  if (n_draws == 0) return Eigen::MatrixXd(0, n);
  if (!J_p.allFinite())
    throw NumericalError("penalized information matrix has non-finite "
                         "entries; no conditional draws possible");

  Eigen::LLT<Eigen::MatrixXd> llt(J_p);
  if (llt.info() != Eigen::Success) {
    const double ridge = 1e-8 * std::abs(J_p.trace()) / std::max(1, n);
    llt.compute(J_p + ridge * Eigen::MatrixXd::Identity(n, n));
  }
  if (llt.info() != Eigen::Success)
    throw NumericalError("penalized information matrix is not positive "
                         "definite even after a ridge repair; no conditional "
                         "draws possible");

  Eigen::MatrixXd draws(n_draws, n);
  Eigen::VectorXd z(n);
  for (int d = 0; d < n_draws; ++d) {
    for (int j = 0; j < n; ++j) z[j] = rng.normal();
    draws.row(d) =
        (theta + llt.matrixU().solve(z)).transpose();
  }
  return draws;
}

std::optional<double> marginal_loglik_approx(const CompiledModel& model,
                                             const Eigen::VectorXd& theta,
                                             const Eigen::VectorXd& lambda,
                                             const Eigen::MatrixXd& J_p) {
  const auto p = static_cast<Eigen::Index>(model.smooths().size());
  const int d = model.layout().n_fixed;
  int range = 0;
  for (Eigen::Index q = 0; q < p; ++q) {
    const SmoothTerm& t = model.smooths()[q].term;
    range += static_cast<int>(t.S.rows()) - t.nullspace_dim;
  }
  const int n = model.dim();
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(n, d + range);
  V.topLeftCorner(d, d).setIdentity();
  int col = d;
  for (Eigen::Index q = 0; q < p; ++q) {
    const SmoothTerm& t = model.smooths()[q].term;
    const int K = static_cast<int>(t.S.rows());
    const int r = K - t.nullspace_dim;
    V.block(model.layout().blocks[q].offset, col, K, r) = t.U.leftCols(r);
    col += r;
  }

  const Eigen::MatrixXd A = V.transpose() * J_p * V;
  if (!A.allFinite()) return std::nullopt;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) return std::nullopt;
  double logdet = 0.0;
  for (int j = 0; j < A.rows(); ++j)
    logdet += 2.0 * std::log(llt.matrixL()(j, j));

  const double nll = model.neg_loglik(theta);
  if (!std::isfinite(nll)) return std::nullopt;
  const Eigen::VectorXd quad = model.penalty_quad_forms(theta);
  double value = -nll - 0.5 * logdet;
  for (Eigen::Index q = 0; q < p; ++q) {
    const SmoothTerm& t = model.smooths()[q].term;
    const double r = static_cast<double>(t.S.rows()) - t.nullspace_dim;
    value += 0.5 * r * std::log(lambda[q]) - 0.5 * lambda[q] * quad[q];
  }
  return value;
}

}  // namespace splinehmm
