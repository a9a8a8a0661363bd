#include "splinehmm/basis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace splinehmm {

namespace {

double binom(int n, int k) {
  double v = 1.0;
  for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
  return v;
}

// Index s with knots[s] <= x < knots[s+1], restricted to the non-degenerate
// spans [degree, num_basis-1]; x == hi maps to the last span.
int find_span(const std::vector<double>& knots, int num_basis, int degree,
              double x) {
  if (x >= knots[num_basis]) return num_basis - 1;
  if (x <= knots[degree]) return degree;
  auto it = std::upper_bound(knots.begin(), knots.end(), x);
  int s = static_cast<int>(it - knots.begin()) - 1;
  return std::clamp(s, degree, num_basis - 1);
}

// Values of the degree+1 B-splines active on span s at x (de Boor recursion).
void basis_funs(int s, double x, int degree, const std::vector<double>& knots,
                double* vals) {
  std::vector<double> left(degree + 1), right(degree + 1);
  vals[0] = 1.0;
  for (int j = 1; j <= degree; ++j) {
    left[j] = x - knots[s + 1 - j];
    right[j] = knots[s + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      double temp = vals[r] / (right[r + 1] + left[j - r]);
      vals[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    vals[j] = saved;
  }
}

// Values and derivatives up to order n of the active B-splines at x.
// ders is (n+1) x (degree+1); row k holds the k-th derivatives.
void ders_basis_funs(int s, double x, int degree, int n,
                     const std::vector<double>& knots, Eigen::MatrixXd& ders) {
  const int p = degree;
  Eigen::MatrixXd ndu(p + 1, p + 1);
  std::vector<double> left(p + 1), right(p + 1);
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - knots[s + 1 - j];
    right[j] = knots[s + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right[r + 1] + left[j - r];
      double temp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu(j, j) = saved;
  }
  ders.setZero(n + 1, p + 1);
  for (int j = 0; j <= p; ++j) ders(0, j) = ndu(j, p);
  Eigen::MatrixXd a(2, p + 1);
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a(0, 0) = 1.0;
    for (int k = 1; k <= n; ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      if (r >= k) {
        a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
        d = a(s2, 0) * ndu(rk, pk);
      }
      const int j1 = (rk >= -1) ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
        d += a(s2, j) * ndu(rk + j, pk);
      }
      if (r <= pk) {
        a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
        d += a(s2, k) * ndu(r, pk);
      }
      ders(k, r) = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= n; ++k) {
    for (int j = 0; j <= p; ++j) ders(k, j) *= factor;
    factor *= (p - k);
  }
}

double wrap_to_domain(const BasisConfig& config, double x) {
  const double period = config.hi - config.lo;
  double y = std::fmod(x - config.lo, period);
  if (y < 0.0) y += period;
  return config.lo + y;
}

// Extended uniform knots for a cyclic basis: num_basis + degree functions on
// knots lo + (j - degree) h, folded onto num_basis wrapped columns.
struct CyclicGrid {
  std::vector<double> knots;
  double h;
  int n_ext;  // extended basis count
};

CyclicGrid cyclic_grid(const BasisConfig& config) {
  const int kf = config.num_basis();
  const int d = config.degree;
  CyclicGrid g;
  g.h = (config.hi - config.lo) / kf;
  g.n_ext = kf + d;
  g.knots.resize(kf + 2 * d + 1);
  for (int j = 0; j < static_cast<int>(g.knots.size()); ++j)
    g.knots[j] = config.lo + (j - d) * g.h;
  return g;
}

int wrap_column(int ext_index, int degree, int num_basis) {
  int c = (ext_index - degree) % num_basis;
  if (c < 0) c += num_basis;
  return c;
}

Eigen::MatrixXd design_any(const BasisConfig& config, const Eigen::VectorXd& x,
                           int deriv) {
  config.validate();
  const int kf = config.num_basis();
  const int d = config.degree;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.size(), kf);
  if (config.cyclic) {
    const CyclicGrid g = cyclic_grid(config);
    Eigen::MatrixXd ders;
    for (Eigen::Index r = 0; r < x.size(); ++r) {
      const double y = wrap_to_domain(config, x[r]);
      int s = d + static_cast<int>(std::floor((y - config.lo) / g.h));
      s = std::clamp(s, d, g.n_ext - 1);
      if (deriv == 0) {
        std::vector<double> vals(d + 1);
        basis_funs(s, y, d, g.knots, vals.data());
        for (int q = 0; q <= d; ++q)
          out(r, wrap_column(s - d + q, d, kf)) += vals[q];
      } else {
        ders_basis_funs(s, y, d, deriv, g.knots, ders);
        for (int q = 0; q <= d; ++q)
          out(r, wrap_column(s - d + q, d, kf)) += ders(deriv, q);
      }
    }
    return out;
  }
  const std::vector<double> knots = basis_knots(config);
  const double span = config.hi - config.lo;
  const double tol = 1e-12 * std::max(1.0, std::abs(span));
  Eigen::MatrixXd ders;
  for (Eigen::Index r = 0; r < x.size(); ++r) {
    double xv = x[r];
    if (!(xv >= config.lo - tol && xv <= config.hi + tol))
      throw DomainError("bspline_design: x = " + std::to_string(xv) +
                        " outside [" + std::to_string(config.lo) + ", " +
                        std::to_string(config.hi) + "]");
    xv = std::clamp(xv, config.lo, config.hi);
    const int s = find_span(knots, kf, d, xv);
    if (deriv == 0) {
      std::vector<double> vals(d + 1);
      basis_funs(s, xv, d, knots, vals.data());
      for (int q = 0; q <= d; ++q) out(r, s - d + q) = vals[q];
    } else {
      ders_basis_funs(s, xv, d, deriv, knots, ders);
      for (int q = 0; q <= d; ++q) out(r, s - d + q) = ders(deriv, q);
    }
  }
  return out;
}

}  // namespace

void BasisConfig::validate() const {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw ConfigError("BasisConfig: domain must satisfy lo < hi and be finite");
  if (degree < 0) throw ConfigError("BasisConfig: degree must be >= 0");
  if (K < degree + 1)
    throw ConfigError("BasisConfig: K must be at least degree + 1");
  if (penalty_order < 1)
    throw ConfigError("BasisConfig: penalty_order must be >= 1");
  if (penalty_order >= K)
    throw ConfigError("BasisConfig: penalty_order must be < K");
}

std::vector<double> basis_knots(const BasisConfig& config) {
  config.validate();
  if (config.cyclic) return cyclic_grid(config).knots;
  const int kf = config.num_basis();
  const int d = config.degree;
  const int n_interior = kf - d - 1;
  const double h = (config.hi - config.lo) / (n_interior + 1);
  std::vector<double> knots(kf + d + 1);
  for (int j = 0; j <= d; ++j) knots[j] = config.lo;
  for (int j = 1; j <= n_interior; ++j) knots[d + j] = config.lo + j * h;
  for (int j = kf; j <= kf + d; ++j) knots[j] = config.hi;
  return knots;
}

Eigen::MatrixXd bspline_design_full(const BasisConfig& config,
                                    const Eigen::VectorXd& x) {
  return design_any(config, x, 0);
}

Eigen::MatrixXd bspline_design(const BasisConfig& config,
                               const Eigen::VectorXd& x) {
  Eigen::MatrixXd full = design_any(config, x, 0);
  if (config.constraint == Constraint::drop_first_coef)
    return full.rightCols(full.cols() - 1);
  return full;
}

Eigen::MatrixXd bspline_design_derivative(const BasisConfig& config,
                                          const Eigen::VectorXd& x,
                                          int deriv) {
  if (deriv < 0) throw ArgumentError("bspline_design_derivative: deriv < 0");
  return design_any(config, x, deriv);
}

Eigen::VectorXd basis_integrals(const BasisConfig& config) {
  config.validate();
  const int kf = config.num_basis();
  Eigen::VectorXd c(kf);
  if (config.cyclic) {
    c.setConstant((config.hi - config.lo) / kf);
    return c;
  }
  const std::vector<double> knots = basis_knots(config);
  for (int k = 0; k < kf; ++k)
    c[k] = (knots[k + config.degree + 1] - knots[k]) / (config.degree + 1);
  return c;
}

Eigen::MatrixXd difference_penalty(int num_basis, int order,
                                   Constraint constraint) {
  if (num_basis < 2 || order < 1 || order >= num_basis)
    throw ArgumentError("difference_penalty: need 1 <= order < num_basis");
  const int rows = num_basis - order;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(rows, num_basis);
  for (int r = 0; r < rows; ++r)
    for (int q = 0; q <= order; ++q)
      D(r, r + q) = ((q % 2) ? -1.0 : 1.0) * binom(order, q);
  if (constraint == Constraint::drop_first_coef)
    D = D.rightCols(num_basis - 1).eval();
  return D.transpose() * D;
}

Eigen::MatrixXd derivative_penalty(const BasisConfig& config) {
  config.validate();
  if (config.cyclic)
    throw ConfigError("derivative_penalty: cyclic bases are not supported");
  if (config.degree < 2)
    throw ConfigError("derivative_penalty: requires degree >= 2");
  const int kf = config.num_basis();
  const int d = config.degree;
  const std::vector<double> knots = basis_knots(config);
  const int n_gl = (2 * d - 3 + 1) / 2 + 1;  // exact for the spanwise product
  std::vector<double> nodes, weights;
  gauss_legendre(n_gl, nodes, weights);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(kf, kf);
  Eigen::MatrixXd ders;
  for (int s = d; s < kf; ++s) {
    const double a = knots[s], b = knots[s + 1];
    if (!(b > a)) continue;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int g = 0; g < n_gl; ++g) {
      const double xg = mid + half * nodes[g];
      ders_basis_funs(s, xg, d, 2, knots, ders);
      const double w = weights[g] * half;
      for (int qi = 0; qi <= d; ++qi)
        for (int qj = 0; qj <= d; ++qj)
          S(s - d + qi, s - d + qj) += w * ders(2, qi) * ders(2, qj);
    }
  }
  if (config.constraint == Constraint::drop_first_coef)
    return S.bottomRightCorner(kf - 1, kf - 1);
  return S;
}

Eigen::MatrixXd cyclic_penalty(int num_basis, int order,
                               Constraint constraint) {
  if (num_basis < 2 || order < 1 || order >= num_basis)
    throw ArgumentError("cyclic_penalty: need 1 <= order < num_basis");
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(num_basis, num_basis);
  for (int r = 0; r < num_basis; ++r)
    for (int q = 0; q <= order; ++q)
      D(r, (r + q) % num_basis) += ((q % 2) ? -1.0 : 1.0) * binom(order, q);
  Eigen::MatrixXd S = D.transpose() * D;
  if (constraint == Constraint::drop_first_coef)
    return S.bottomRightCorner(num_basis - 1, num_basis - 1);
  return S;
}

SmoothTerm penalty_eigen(const BasisConfig& config, const Eigen::MatrixXd& S,
                         double eps) {
  if (S.rows() != S.cols()) throw ArgumentError("penalty_eigen: S not square");
  const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ArgumentError("penalty_eigen: S not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (S + S.transpose()));
  if (es.info() != Eigen::Success)
    throw NumericalError("penalty_eigen: eigendecomposition failed");
  const int k = static_cast<int>(S.rows());
  SmoothTerm term;
  term.config = config;
  term.S = 0.5 * (S + S.transpose());
  term.U.resize(k, k);
  term.eigvals.resize(k);
  // Eigen returns ascending order; store descending.
  for (int i = 0; i < k; ++i) {
    term.eigvals[i] = es.eigenvalues()[k - 1 - i];
    term.U.col(i) = es.eigenvectors().col(k - 1 - i);
  }
  const double lmax = std::max(term.eigvals.size() ? term.eigvals[0] : 0.0, 1.0);
  if (term.eigvals.minCoeff() < -1e-8 * lmax)
    throw ArgumentError("penalty_eigen: S has a negative eigenvalue");
  term.eigvals = term.eigvals.cwiseMax(0.0);
  term.nullspace_dim = 0;
  for (int i = 0; i < k; ++i)
    if (term.eigvals[i] < eps * lmax) ++term.nullspace_dim;
  return term;
}

SmoothTerm make_smooth_term(const BasisConfig& config, PenaltyKind kind,
                            double eps) {
  config.validate();
  Eigen::MatrixXd S;
  if (kind == PenaltyKind::derivative) {
    S = derivative_penalty(config);
  } else if (config.cyclic) {
    S = cyclic_penalty(config.num_basis(), config.penalty_order,
                       config.constraint);
  } else {
    S = difference_penalty(config.num_basis(), config.penalty_order,
                           config.constraint);
  }
  return penalty_eigen(config, S, eps);
}

void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  if (n < 1) throw ArgumentError("gauss_legendre: n must be >= 1");
  nodes.resize(n);
  weights.resize(n);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      // Legendre polynomial and derivative by recurrence.
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

Eigen::MatrixXd centering_nullbasis(int num_basis) {
  if (num_basis < 2)
    throw ArgumentError("centering_nullbasis: need num_basis >= 2");
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(num_basis, 1);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(ones);
  Eigen::MatrixXd Q = qr.householderQ();
  return Q.rightCols(num_basis - 1);
}

}  // namespace splinehmm
