#include "splinehmm/optimize.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "splinehmm/errors.hpp"

namespace splinehmm {

namespace {

struct LinePoint {
  double a = 0.0;
  double f = 0.0;
  double d = 0.0;  // directional derivative
  Eigen::VectorXd g;
};

struct LineSearch {
  const Objective& f;
  const Eigen::VectorXd& x;
  const Eigen::VectorXd& p;
  double f0, d0, c1, c2;
  int evals = 0;

  LinePoint eval(double a) {
    LinePoint pt;
    pt.a = a;
    Eigen::VectorXd g(x.size());
    pt.f = f(x + a * p, g);
    pt.d = g.dot(p);
    pt.g = std::move(g);
    ++evals;
    return pt;
  }

  bool armijo(const LinePoint& pt) const { return pt.f <= f0 + c1 * pt.a * d0; }
  bool curvature(const LinePoint& pt) const {
    return std::abs(pt.d) <= -c2 * d0;
  }

  // Nocedal-Wright zoom on a bracket known to contain a Wolfe point.
  bool zoom(LinePoint lo, LinePoint hi, int budget, LinePoint& out) {
    for (int k = 0; k < budget; ++k) {
      double a;
      {
        // Quadratic model through (lo.f, lo.d) and hi.f, guarded toward
        // bisection when it leaves the bracket interior.
        const double da = hi.a - lo.a;
        const double q = lo.f + lo.d * da - hi.f;
        a = q != 0.0 ? lo.a + 0.5 * lo.d * da * da / q : 0.5 * (lo.a + hi.a);
        const double amin = std::min(lo.a, hi.a);
        const double amax = std::max(lo.a, hi.a);
        const double margin = 0.1 * (amax - amin);
        if (!(a > amin + margin) || !(a < amax - margin))
          a = 0.5 * (lo.a + hi.a);
      }
      LinePoint pt = eval(a);
      if (!armijo(pt) || pt.f >= lo.f) {
        hi = std::move(pt);
      } else {
        if (curvature(pt)) {
          out = std::move(pt);
          return true;
        }
        if (pt.d * (hi.a - lo.a) >= 0.0) hi = lo;
        lo = std::move(pt);
      }
      // Collapse only near machine precision: stiff penalties can need
      // steps around 1e-12 and must not abort the bracket early.
      if (std::abs(hi.a - lo.a) <
          8.0 * std::numeric_limits<double>::epsilon() *
              std::max(1.0, std::max(std::abs(lo.a), std::abs(hi.a))))
        break;
    }
    // Interval collapsed: accept the best point if it at least made progress.
    if (lo.a > 0.0 && lo.f < f0) {
      out = std::move(lo);
      return true;
    }
    return false;
  }

  bool run(int budget, LinePoint& out) {
    LinePoint prev;
    prev.a = 0.0;
    prev.f = f0;
    prev.d = d0;
    double a = 1.0;
    const double amax = 1e4;
    for (int i = 0; i < budget; ++i) {
      LinePoint pt = eval(a);
      if (!armijo(pt) || (i > 0 && pt.f >= prev.f))
        return zoom(std::move(prev), std::move(pt), budget, out);
      if (curvature(pt)) {
        out = std::move(pt);
        return true;
      }
      if (pt.d >= 0.0) return zoom(std::move(pt), std::move(prev), budget, out);
      prev = std::move(pt);
      a = std::min(2.0 * a, amax);
      if (prev.a >= amax) break;
    }
    return false;
  }
};

}  // namespace

OptimResult minimize(const Objective& f, const Eigen::VectorXd& theta0,
                     const OptimOptions& opt, const Eigen::MatrixXd* H0) {
  const int n = static_cast<int>(theta0.size());
  OptimResult res;
  res.theta = theta0;
  res.grad.resize(n);
  res.value = f(res.theta, res.grad);
  res.n_eval = 1;
  if (!std::isfinite(res.value) || !res.grad.allFinite())
    throw NumericalError("objective is not finite at the starting point");

  auto converged = [&]() {
    return res.grad.norm() <= opt.grad_tol * std::max(1.0, std::abs(res.value));
  };
  const bool lbfgs = opt.use_lbfgs;
  Eigen::MatrixXd H;
  if (!lbfgs)
    H = (H0 && H0->rows() == n && H0->cols() == n)
            ? *H0
            : Eigen::MatrixXd::Identity(n, n);
  const bool seeded = !lbfgs && H0 && H0->rows() == n && H0->cols() == n;
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> mem;  // (s, y)

  if (converged()) {
    res.converged = true;
    if (!lbfgs) res.inv_hessian = std::move(H);
    return res;
  }

  bool first_update = !seeded;
  for (int it = 1; it <= opt.max_iter; ++it) {
    Eigen::VectorXd p;
    if (lbfgs) {
      // Two-loop recursion.
      p = -res.grad;
      std::vector<double> alpha(mem.size());
      for (int k = static_cast<int>(mem.size()) - 1; k >= 0; --k) {
        const auto& [s, y] = mem[k];
        alpha[k] = s.dot(p) / y.dot(s);
        p -= alpha[k] * y;
      }
      if (!mem.empty()) {
        const auto& [s, y] = mem.back();
        p *= s.dot(y) / y.dot(y);
      }
      for (std::size_t k = 0; k < mem.size(); ++k) {
        const auto& [s, y] = mem[k];
        p += (alpha[k] - y.dot(p) / y.dot(s)) * s;
      }
    } else {
      p = -(H * res.grad);
    }
    double gTp = res.grad.dot(p);
    if (!p.allFinite() || gTp >= 0.0) {
      p = -res.grad;
      gTp = -res.grad.squaredNorm();
      if (!lbfgs) H.setIdentity();
      mem.clear();
      first_update = true;
    }

    LineSearch ls{f, res.theta, p, res.value, gTp, opt.wolfe_c1, opt.wolfe_c2};
    LinePoint pt;
    const bool ok = ls.run(opt.max_line_iter, pt);
    res.n_eval += ls.evals;
    if (!ok) {
      // Retry once along steepest descent before giving up.
      if ((p + res.grad).norm() > 1e-14 * res.grad.norm()) {
        p = -res.grad;
        gTp = -res.grad.squaredNorm();
        if (!lbfgs) H.setIdentity();
        mem.clear();
        first_update = true;
        LineSearch ls2{f,   res.theta,    p,           res.value,
                       gTp, opt.wolfe_c1, opt.wolfe_c2};
        const bool ok2 = ls2.run(opt.max_line_iter, pt);
        res.n_eval += ls2.evals;
        if (!ok2) break;
      } else {
        break;
      }
    }

    const Eigen::VectorXd s = pt.a * p;
    const Eigen::VectorXd y = pt.g - res.grad;
    res.theta += s;
    res.value = pt.f;
    res.grad = std::move(pt.g);
    res.n_iter = it;

    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      if (lbfgs) {
        mem.emplace_back(s, y);
        if (static_cast<int>(mem.size()) > opt.lbfgs_memory) mem.pop_front();
      } else {
        if (first_update) {
          H = (sy / y.squaredNorm()) * Eigen::MatrixXd::Identity(n, n);
          first_update = false;
        }
        const double rho = 1.0 / sy;
        const Eigen::VectorXd Hy = H * y;
        H -= rho * (Hy * s.transpose() + s * Hy.transpose());
        H += rho * (1.0 + rho * y.dot(Hy)) * (s * s.transpose());
      }
    }

    if (converged()) {
      res.converged = true;
      break;
    }
  }
  if (!lbfgs) res.inv_hessian = std::move(H);
  return res;
}

PenalizedFit fit_penalized(const CompiledModel& model,
                           const Eigen::VectorXd& lambda,
                           const Eigen::VectorXd& theta0,
                           const OptimOptions& opt, const Eigen::MatrixXd* H0) {
  if (lambda.size() != static_cast<Eigen::Index>(model.smooths().size()))
    throw ArgumentError("one smoothing parameter per smooth is required");
  if ((lambda.array() < 0.0).any() || !lambda.allFinite())
    throw ArgumentError("smoothing parameters must be finite and nonnegative");
  if (!std::isfinite(model.neg_loglik(theta0)))
    throw NumericalError("starting values give an invalid likelihood");

  auto obj = [&](const Eigen::VectorXd& th, Eigen::VectorXd& gr) {
    NllEval e = model.penalized_grad(th, lambda);
    gr = std::move(e.grad);
    return e.value;
  };
  OptimResult r = minimize(obj, theta0, opt, H0);
  if (r.value >= 1e9)
    throw NumericalError(
        "optimizer could not leave the invalid-parameter barrier");

  PenalizedFit fit;
  fit.theta = std::move(r.theta);
  fit.pnll = r.value;
  fit.nll = r.value - model.penalty_value(fit.theta, lambda);
  fit.grad = std::move(r.grad);
  fit.n_iter = r.n_iter;
  fit.n_eval = r.n_eval;
  fit.converged = r.converged;
  fit.inv_hessian = std::move(r.inv_hessian);
  return fit;
}

Eigen::MatrixXd unpenalized_hessian_fd(const CompiledModel& model,
                                       const Eigen::VectorXd& theta) {
  const int n = model.dim();
  NllEval base = model.neg_loglik_grad(theta);
  if (!base.ok)
    throw NumericalError("cannot differentiate the gradient at an invalid "
                         "parameter vector");
  Eigen::MatrixXd J(n, n);
  Eigen::VectorXd th = theta;
  for (int j = 0; j < n; ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(theta[j]));
    th[j] = theta[j] + h;
    NllEval e = model.neg_loglik_grad(th);
    if (e.ok) {
      J.col(j) = (e.grad - base.grad) / h;
    } else {
      th[j] = theta[j] - h;
      e = model.neg_loglik_grad(th);
      if (!e.ok)
        throw NumericalError("gradient not evaluable near the fitted values");
      J.col(j) = (base.grad - e.grad) / h;
    }
    th[j] = theta[j];
  }
  return 0.5 * (J + J.transpose());
}

Eigen::MatrixXd penalized_hessian(const CompiledModel& model,
                                  const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& lambda,
                                  const Eigen::MatrixXd* J_unpen) {
  Eigen::MatrixXd J =
      J_unpen ? *J_unpen : unpenalized_hessian_fd(model, theta);
  model.add_penalty_hessian(lambda, J);
  return J;
}

}  // namespace splinehmm
