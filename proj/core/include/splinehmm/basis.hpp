#pragma once

#include <Eigen/Dense>
#include <vector>

#include "splinehmm/errors.hpp"

namespace splinehmm {

enum class Constraint { none, drop_first_coef };

// B-spline basis on [lo, hi] with equally spaced knots.  Non-cyclic bases are
// clamped (boundary knots repeated degree+1 times); cyclic bases wrap modulo
// the period hi - lo.  K counts the free coefficients: with drop_first_coef
// the underlying basis has K+1 functions and the first coefficient is pinned
// to zero.
struct BasisConfig {
  int K = 10;
  int degree = 3;
  double lo = 0.0;
  double hi = 1.0;
  bool cyclic = false;
  int penalty_order = 2;
  Constraint constraint = Constraint::none;

  int num_basis() const {
    return constraint == Constraint::drop_first_coef ? K + 1 : K;
  }
  void validate() const;
};

// Knot vector: clamped for non-cyclic bases, extended uniform grid for cyclic.
std::vector<double> basis_knots(const BasisConfig& config);

// len(x) x num_basis() design matrix, no constraint applied.
Eigen::MatrixXd bspline_design_full(const BasisConfig& config,
                                    const Eigen::VectorXd& x);

// len(x) x K design matrix over the free coefficients (drop_first_coef
// removes the first column).
Eigen::MatrixXd bspline_design(const BasisConfig& config,
                               const Eigen::VectorXd& x);

// Derivatives of order `deriv` of all num_basis() functions at x.
Eigen::MatrixXd bspline_design_derivative(const BasisConfig& config,
                                          const Eigen::VectorXd& x, int deriv);

// Exact integrals of the num_basis() functions over one period/domain.
// Non-cyclic: knot-span width divided by degree+1; cyclic: the knot spacing.
Eigen::VectorXd basis_integrals(const BasisConfig& config);

// S = D'D with D the order-th difference matrix of num_basis columns.
// drop_first_coef removes the first column of D before forming S.
Eigen::MatrixXd difference_penalty(int num_basis, int order,
                                   Constraint constraint);

// S_jk = integral of B_j'' B_k'' over [lo, hi], exact per-span Gauss-Legendre.
// Requires degree >= 2 and a non-cyclic basis.
Eigen::MatrixXd derivative_penalty(const BasisConfig& config);

// Wrapped difference penalty: D is circulant, nullspace is the constants.
Eigen::MatrixXd cyclic_penalty(int num_basis, int order, Constraint constraint);

// Penalty with its eigendecomposition.  S = U diag(eigvals) U', eigenvalues
// sorted descending and clamped at zero; nullspace_dim = m counts eigenvalues
// below eps * max(largest eigenvalue, 1).
struct SmoothTerm {
  BasisConfig config;
  Eigen::MatrixXd S;
  Eigen::MatrixXd U;
  Eigen::VectorXd eigvals;
  int nullspace_dim = 0;
};

SmoothTerm penalty_eigen(const BasisConfig& config, const Eigen::MatrixXd& S,
                         double eps = 1e-10);

enum class PenaltyKind { difference, derivative };

SmoothTerm make_smooth_term(const BasisConfig& config, PenaltyKind kind,
                            double eps = 1e-10);

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights);

// Orthonormal basis of the orthogonal complement of the constant coefficient
// direction; used to absorb the sum-to-zero constraint of centered smooths.
Eigen::MatrixXd centering_nullbasis(int num_basis);

}  // namespace splinehmm
