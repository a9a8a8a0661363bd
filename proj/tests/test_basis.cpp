#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "oracle_data.hpp"
#include "splinehmm/basis.hpp"
#include "splinehmm/errors.hpp"
#include "testutil.hpp"

using namespace splinehmm;

namespace {

BasisConfig config_a() {
  BasisConfig c;
  c.K = 8;
  c.degree = 3;
  c.lo = 0.0;
  c.hi = 1.0;
  return c;
}

BasisConfig config_b() {
  BasisConfig c;
  c.K = 5;
  c.degree = 2;
  c.lo = -2.0;
  c.hi = 3.0;
  return c;
}

BasisConfig config_cyclic() {
  BasisConfig c;
  c.K = 6;
  c.degree = 3;
  c.lo = 0.0;
  c.hi = oracle::cyclic_hi;
  c.cyclic = true;
  return c;
}

template <int R, int C>
Eigen::MatrixXd to_matrix(const double (&a)[R][C]) {
  Eigen::MatrixXd m(R, C);
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) m(r, c) = a[r][c];
  return m;
}

template <int N>
Eigen::VectorXd to_vector(const double (&a)[N]) {
  return Eigen::Map<const Eigen::VectorXd>(a, N);
}

}  // namespace

TEST_CASE("design matrix matches the frozen reference") {
  const Eigen::MatrixXd got_a =
      bspline_design_full(config_a(), to_vector(oracle::design_a_x));
  CHECK(testutil::max_abs_diff(got_a, to_matrix(oracle::design_a)) < 1e-13);

  const Eigen::MatrixXd got_b =
      bspline_design_full(config_b(), to_vector(oracle::design_b_x));
  CHECK(testutil::max_abs_diff(got_b, to_matrix(oracle::design_b)) < 1e-13);
}

TEST_CASE("design derivatives match the frozen reference") {
  const Eigen::VectorXd x = to_vector(oracle::design_a_dx);
  CHECK(testutil::max_abs_diff(bspline_design_derivative(config_a(), x, 1),
                               to_matrix(oracle::design_a_d1)) < 1e-11);
  CHECK(testutil::max_abs_diff(bspline_design_derivative(config_a(), x, 2),
                               to_matrix(oracle::design_a_d2)) < 1e-9);
}

TEST_CASE("degree zero basis is a bin indicator") {
  BasisConfig c;
  c.K = 4;
  c.degree = 0;
  c.penalty_order = 1;
  Eigen::VectorXd x(1);
  x << 0.3;
  const Eigen::MatrixXd d = bspline_design_full(c, x);
  Eigen::RowVectorXd want(4);
  want << 0, 1, 0, 0;
  CHECK(testutil::max_abs_diff(d, want) == 0.0);
}

TEST_CASE("cubic values at a deep interior knot") {
  BasisConfig c;
  c.K = 13;
  c.degree = 3;
  Eigen::VectorXd x(1);
  x << 0.5;
  const Eigen::MatrixXd d = bspline_design_full(c, x);
  std::vector<double> nonzero;
  for (Eigen::Index j = 0; j < d.cols(); ++j)
    if (std::abs(d(0, j)) > 1e-14) nonzero.push_back(d(0, j));
  REQUIRE(nonzero.size() == 3);
  CHECK(nonzero[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(nonzero[1] == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
  CHECK(nonzero[2] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("partition of unity and local support") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd x(1000);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = unif(gen);
  const Eigen::MatrixXd d = bspline_design_full(config_a(), x);
  for (Eigen::Index r = 0; r < d.rows(); ++r) {
    CHECK(std::abs(d.row(r).sum() - 1.0) < 1e-10);
    int nonzero = 0;
    for (Eigen::Index j = 0; j < d.cols(); ++j)
      if (d(r, j) != 0.0) ++nonzero;
    CHECK(nonzero <= config_a().degree + 1);
  }
}

TEST_CASE("domain and configuration errors") {
  Eigen::VectorXd bad(1);
  bad << 1.5;
  CHECK_THROWS_AS(bspline_design_full(config_a(), bad), DomainError);
  bad << -0.2;
  CHECK_THROWS_AS(bspline_design_full(config_a(), bad), DomainError);

  BasisConfig c = config_a();
  c.K = 3;  // needs degree + 1 = 4
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = config_a();
  c.penalty_order = 8;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = config_a();
  c.hi = c.lo;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("drop_first_coef removes the first column") {
  BasisConfig c = config_a();
  c.constraint = Constraint::drop_first_coef;
  REQUIRE(c.num_basis() == 9);
  Eigen::VectorXd x(4);
  x << 0.1, 0.4, 0.55, 0.9;
  const Eigen::MatrixXd full = bspline_design_full(c, x);
  const Eigen::MatrixXd free = bspline_design(c, x);
  REQUIRE(free.cols() == 8);
  CHECK(testutil::max_abs_diff(free, full.rightCols(8)) == 0.0);
}

TEST_CASE("cyclic design wraps and matches the frozen reference") {
  const BasisConfig c = config_cyclic();
  const Eigen::MatrixXd got =
      bspline_design_full(c, to_vector(oracle::cyclic_x));
  CHECK(testutil::max_abs_diff(got, to_matrix(oracle::cyclic_design)) < 1e-13);

  // Continuity across the seam: the rows at lo and hi coincide.
  Eigen::VectorXd ends(2);
  ends << c.lo, c.hi;
  const Eigen::MatrixXd d = bspline_design_full(c, ends);
  CHECK(testutil::max_abs_diff(d.row(0), d.row(1)) < 1e-10);

  // A full period shift leaves a row unchanged.
  Eigen::VectorXd shifted(2);
  shifted << 1.3, 1.3 + (c.hi - c.lo);
  const Eigen::MatrixXd s = bspline_design_full(c, shifted);
  CHECK(testutil::max_abs_diff(s.row(0), s.row(1)) < 1e-10);
}

TEST_CASE("basis integrals") {
  CHECK(testutil::max_abs_diff(basis_integrals(config_a()),
                               to_vector(oracle::integrals_a)) < 1e-14);
  CHECK(testutil::max_abs_diff(basis_integrals(config_b()),
                               to_vector(oracle::integrals_b)) < 1e-14);

  const BasisConfig c = config_cyclic();
  const Eigen::VectorXd ci = basis_integrals(c);
  for (Eigen::Index j = 0; j < ci.size(); ++j)
    CHECK(ci[j] == doctest::Approx((c.hi - c.lo) / c.K).epsilon(1e-14));
}

TEST_CASE("difference penalty small cases") {
  SUBCASE("four coefficients, second order") {
    const Eigen::MatrixXd S = difference_penalty(4, 2, Constraint::none);
    Eigen::MatrixXd want(4, 4);
    want << 1, -2, 1, 0,
            -2, 5, -4, 1,
            1, -4, 5, -2,
            0, 1, -2, 1;
    CHECK(testutil::max_abs_diff(S, want) == 0.0);

    Eigen::VectorXd constant = Eigen::VectorXd::Ones(4);
    Eigen::VectorXd ramp(4);
    ramp << 0, 1, 2, 3;
    CHECK(std::abs(constant.dot(S * constant)) < 1e-14);
    CHECK(std::abs(ramp.dot(S * ramp)) < 1e-14);
  }
  SUBCASE("three coefficients, second order") {
    const Eigen::MatrixXd S = difference_penalty(3, 2, Constraint::none);
    Eigen::VectorXd b = Eigen::VectorXd::Ones(3);
    CHECK(std::abs(b.dot(S * b)) < 1e-14);
  }
  SUBCASE("first order penalizes a ramp") {
    const Eigen::MatrixXd S1 = difference_penalty(4, 1, Constraint::none);
    const Eigen::MatrixXd S2 = difference_penalty(4, 2, Constraint::none);
    Eigen::VectorXd ramp(4);
    ramp << 0, 1, 2, 3;
    CHECK(ramp.dot(S1 * ramp) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(std::abs(ramp.dot(S2 * ramp)) < 1e-14);
  }
  SUBCASE("drop_first_coef removes the first column of D") {
    const Eigen::MatrixXd S = difference_penalty(4, 2, Constraint::none);
    const Eigen::MatrixXd Sd =
        difference_penalty(4, 2, Constraint::drop_first_coef);
    CHECK(testutil::max_abs_diff(Sd, S.bottomRightCorner(3, 3)) == 0.0);
  }
}

TEST_CASE("derivative penalty matches the frozen quadrature reference") {
  const Eigen::MatrixXd S = derivative_penalty(config_a());
  CHECK(testutil::rel_frobenius(S, to_matrix(oracle::derivpen_a)) < 1e-9);

  // Functions with zero second derivative are unpenalized: B-spline
  // coefficients of 1 and of x are constants and Greville means.
  const std::vector<double> knots = basis_knots(config_a());
  Eigen::VectorXd greville(8);
  for (int k = 0; k < 8; ++k)
    greville[k] = (knots[k + 1] + knots[k + 2] + knots[k + 3]) / 3.0;
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(8);
  CHECK(std::abs(ones.dot(S * ones)) < 1e-9);
  CHECK(std::abs(greville.dot(S * greville)) < 1e-9);

  for (int k = 0; k < 8; ++k)
    CHECK(S(k, k) > 0.0);

  BasisConfig bad = config_a();
  bad.degree = 1;
  CHECK_THROWS_AS(derivative_penalty(bad), ConfigError);
  bad = config_cyclic();
  CHECK_THROWS_AS(derivative_penalty(bad), ConfigError);
}

TEST_CASE("cyclic penalty") {
  const Eigen::MatrixXd S = cyclic_penalty(5, 2, Constraint::none);
  Eigen::VectorXd constant = Eigen::VectorXd::Ones(5);
  CHECK(std::abs(constant.dot(S * constant)) < 1e-14);

  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(5);
  e1[0] = 1.0;
  CHECK(e1.dot(S * e1) == doctest::Approx(6.0).epsilon(1e-14));

  BasisConfig c;
  c.K = 5;
  c.degree = 2;
  c.cyclic = true;
  const SmoothTerm term = penalty_eigen(c, S);
  CHECK(term.nullspace_dim == 1);
}

TEST_CASE("penalty eigendecomposition") {
  BasisConfig c3;
  c3.K = 3;
  c3.degree = 2;
  c3.penalty_order = 1;

  SUBCASE("identity and zero penalties") {
    const SmoothTerm id = penalty_eigen(c3, Eigen::MatrixXd::Identity(3, 3));
    CHECK(id.nullspace_dim == 0);
    for (int j = 0; j < 3; ++j)
      CHECK(id.eigvals[j] == doctest::Approx(1.0).epsilon(1e-14));

    const SmoothTerm zero = penalty_eigen(c3, Eigen::MatrixXd::Zero(3, 3));
    CHECK(zero.nullspace_dim == 3);
  }
  SUBCASE("difference penalty nullspace dimensions") {
    BasisConfig c10;
    c10.K = 10;
    c10.degree = 3;
    const Eigen::MatrixXd S = difference_penalty(10, 2, Constraint::none);
    CHECK(penalty_eigen(c10, S).nullspace_dim == 2);
    c10.penalty_order = 1;
    CHECK(penalty_eigen(c10, difference_penalty(10, 1, Constraint::none))
              .nullspace_dim == 1);
    c10.penalty_order = 3;
    CHECK(penalty_eigen(c10, difference_penalty(10, 3, Constraint::none))
              .nullspace_dim == 3);
  }
  SUBCASE("round trip, orthonormality, descending order") {
    BasisConfig c10;
    c10.K = 10;
    c10.degree = 3;
    const SmoothTerm t = make_smooth_term(c10, PenaltyKind::difference);
    const Eigen::MatrixXd rebuilt =
        t.U * t.eigvals.asDiagonal() * t.U.transpose();
    CHECK(testutil::rel_frobenius(rebuilt, t.S) < 1e-8);
    CHECK(testutil::max_abs_diff(t.U.transpose() * t.U,
                                 Eigen::MatrixXd::Identity(10, 10)) < 1e-10);
    for (Eigen::Index j = 1; j < t.eigvals.size(); ++j)
      CHECK(t.eigvals[j - 1] >= t.eigvals[j]);
    CHECK(t.eigvals.minCoeff() >= 0.0);
  }
  SUBCASE("asymmetric input is rejected") {
    Eigen::MatrixXd S = Eigen::MatrixXd::Identity(3, 3);
    S(0, 1) = 0.5;
    CHECK_THROWS_AS(penalty_eigen(c3, S), ArgumentError);
  }
}

TEST_CASE("every constructed penalty is positive semidefinite") {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> normal;
  std::vector<Eigen::MatrixXd> penalties = {
      difference_penalty(10, 2, Constraint::none),
      difference_penalty(8, 1, Constraint::drop_first_coef),
      derivative_penalty(config_a()),
      cyclic_penalty(7, 2, Constraint::none)};
  for (const Eigen::MatrixXd& S : penalties) {
    for (int rep = 0; rep < 100; ++rep) {
      Eigen::VectorXd b(S.rows());
      for (Eigen::Index j = 0; j < b.size(); ++j) b[j] = normal(gen);
      CHECK(b.dot(S * b) >= -1e-10 * b.squaredNorm());
    }
  }
}

TEST_CASE("gauss legendre nodes integrate polynomials exactly") {
  std::vector<double> nodes, weights;
  gauss_legendre(5, nodes, weights);
  REQUIRE(nodes.size() == 5);
  double sum_w = 0.0, x8 = 0.0, x9 = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    sum_w += weights[i];
    x8 += weights[i] * std::pow(nodes[i], 8);
    x9 += weights[i] * std::pow(nodes[i], 9);
  }
  CHECK(sum_w == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(x8 == doctest::Approx(2.0 / 9.0).epsilon(1e-13));
  CHECK(std::abs(x9) < 1e-14);
}

TEST_CASE("centering nullbasis") {
  const Eigen::MatrixXd Z = centering_nullbasis(6);
  REQUIRE(Z.rows() == 6);
  REQUIRE(Z.cols() == 5);
  CHECK(testutil::max_abs_diff(Z.transpose() * Z,
                               Eigen::MatrixXd::Identity(5, 5)) < 1e-12);
  CHECK((Eigen::RowVectorXd::Ones(6) * Z).cwiseAbs().maxCoeff() < 1e-12);
}
