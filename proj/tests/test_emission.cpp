#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <iterator>
#include <random>
#include <vector>

#include "oracle_data.hpp"
#include "splinehmm/emission.hpp"
#include "splinehmm/errors.hpp"
#include "splinehmm/special.hpp"
#include "testutil.hpp"

using namespace splinehmm;

namespace {

constexpr double kPi = 3.14159265358979323846;

double logf(Family f, double x, double p0, double p1) {
  const double p[2] = {p0, p1};
  return log_density(f, x, p);
}

// Central finite differences of log_density in the natural parameters.
void fd_grad(Family f, double x, const double* params, double* out) {
  for (int j = 0; j < 2; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(params[j]));
    double hi[2] = {params[0], params[1]};
    double lo[2] = {params[0], params[1]};
    hi[j] += h;
    lo[j] -= h;
    out[j] = (log_density(f, x, hi) - log_density(f, x, lo)) / (2.0 * h);
  }
}

}  // namespace

TEST_CASE("log densities match the frozen references") {
  for (const auto& row : oracle::gauss_cases) {
    const double got = logf(Family::gaussian, row[0], row[1], row[2]);
    CHECK(std::abs(got - row[3]) < 1e-10 * std::max(1.0, std::abs(row[3])));
  }
  for (const auto& row : oracle::gamma_cases) {
    const double got = logf(Family::gamma, row[0], row[1], row[2]);
    CHECK(std::abs(got - row[3]) < 1e-10 * std::max(1.0, std::abs(row[3])));
  }
  for (const auto& row : oracle::vonmises_cases) {
    const double got = logf(Family::vonmises, row[0], row[1], row[2]);
    CHECK(std::abs(got - row[3]) < 1e-10 * std::max(1.0, std::abs(row[3])));
  }
}

TEST_CASE("log density spot values") {
  // Standard normal at its peak.
  CHECK(logf(Family::gaussian, 0.7, 0.7, 1.0) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-12));
  // Mean 1, sd 1 is the unit exponential.
  CHECK(logf(Family::gamma, 2.0, 1.0, 1.0) ==
        doctest::Approx(-2.0).epsilon(1e-12));
  // Zero concentration is uniform on the circle.
  for (double x : {-3.0, 0.0, 2.5})
    CHECK(logf(Family::vonmises, x, 1.1, 0.0) ==
          doctest::Approx(-std::log(2.0 * kPi)).epsilon(1e-12));
}

TEST_CASE("parameter domain violations throw") {
  CHECK_THROWS_AS(logf(Family::gaussian, 0.0, 0.0, 0.0), DomainError);
  CHECK_THROWS_AS(logf(Family::gaussian, 0.0, 0.0, -1.0), DomainError);
  CHECK_THROWS_AS(logf(Family::gamma, 1.0, -2.0, 1.0), DomainError);
  CHECK_THROWS_AS(logf(Family::gamma, 1.0, 2.0, 0.0), DomainError);
  CHECK_THROWS_AS(logf(Family::gamma, 0.0, 2.0, 1.0), DomainError);
  CHECK_THROWS_AS(logf(Family::gamma, -1.0, 2.0, 1.0), DomainError);
  CHECK_THROWS_AS(logf(Family::vonmises, 0.0, 0.0, -0.5), DomainError);
}

TEST_CASE("observation support validation") {
  CHECK_NOTHROW(validate_support(Family::gaussian, -1e8));
  CHECK_THROWS_AS(validate_support(Family::gaussian,
                                   std::numeric_limits<double>::infinity()),
                  DomainError);
  CHECK_THROWS_AS(validate_support(Family::gamma, 0.0), DomainError);
  CHECK_NOTHROW(validate_support(Family::vonmises, kPi));
  CHECK_THROWS_AS(validate_support(Family::vonmises, 4.0), DomainError);
  CHECK_THROWS_AS(validate_support(Family::vonmises, -3.5), DomainError);
}

TEST_CASE("analytic gradients match central differences") {
  struct Case {
    Family family;
    double x, p0, p1;
  };
  const std::vector<Case> cases = {
      {Family::gaussian, 0.3, 0.0, 1.0},  {Family::gaussian, -4.0, 1.5, 0.4},
      {Family::gamma, 2.2, 2.0, 0.5},     {Family::gamma, 0.1, 1.0, 1.0},
      {Family::gamma, 7.0, 5.0, 3.0},     {Family::vonmises, 0.3, 0.0, 0.5},
      {Family::vonmises, -3.0, 1.2, 2.0}, {Family::vonmises, 2.8, -0.7, 10.0},
      {Family::vonmises, 0.5, 0.0, 120.0}};
  for (const Case& c : cases) {
    const double p[2] = {c.p0, c.p1};
    double g[2], fd[2];
    log_density_grad(c.family, c.x, p, g);
    fd_grad(c.family, c.x, p, fd);
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(g[j] - fd[j]) < 1e-5 * std::max(1.0, std::abs(fd[j])));
  }
}

TEST_CASE("densities integrate to one") {
  // Gaussian over +-10 sd.
  for (auto [mu, sd] : std::vector<std::pair<double, double>>{
           {0.0, 1.0}, {3.0, 0.2}, {-2.0, 5.0}}) {
    const double v = testutil::simpson(
        [&](double x) { return std::exp(logf(Family::gaussian, x, mu, sd)); },
        mu - 10.0 * sd, mu + 10.0 * sd, 20000);
    CHECK(std::abs(v - 1.0) < 1e-8);
  }
  // Gamma with shape >= 1 so the density is bounded at the origin.
  for (auto [m, s] : std::vector<std::pair<double, double>>{
           {2.0, 0.5}, {1.0, 1.0}, {5.0, 3.0}}) {
    const double v = testutil::simpson(
        [&](double x) { return std::exp(logf(Family::gamma, x, m, s)); },
        1e-12, m + 40.0 * s, 200000);
    CHECK(std::abs(v - 1.0) < 1e-5);
  }
  // Von Mises over one period.
  for (double kappa : {0.0, 0.5, 2.0, 120.0}) {
    const double v = testutil::simpson(
        [&](double x) { return std::exp(logf(Family::vonmises, x, 0.3, kappa)); },
        -kPi, kPi, 20000);
    CHECK(std::abs(v - 1.0) < 1e-8);
  }
}

TEST_CASE("special functions match the frozen references") {
  for (std::size_t i = 0; i < std::size(oracle::digamma_x); ++i) {
    const double got = digamma(oracle::digamma_x[i]);
    const double want = oracle::digamma_v[i];
    CHECK(std::abs(got - want) < 1e-10 * std::max(1.0, std::abs(want)));
  }
  for (std::size_t i = 0; i < std::size(oracle::bessel_x); ++i) {
    const double x = oracle::bessel_x[i];
    CHECK(std::abs(log_bessel_i0(x) - oracle::log_i0_v[i]) <
          1e-10 * std::max(1.0, std::abs(oracle::log_i0_v[i])));
    CHECK(std::abs(bessel_i1_over_i0(x) - oracle::i1_over_i0_v[i]) < 1e-10);
  }
}

TEST_CASE("spline weights") {
  SUBCASE("zero coefficients give uniform weights") {
    const Eigen::VectorXd w = spline_weights(Eigen::VectorXd::Zero(9));
    REQUIRE(w.size() == 10);
    for (Eigen::Index k = 0; k < w.size(); ++k)
      CHECK(w[k] == doctest::Approx(0.1).epsilon(1e-14));
  }
  SUBCASE("weights are a strictly positive distribution") {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> normal(0.0, 3.0);
    for (int rep = 0; rep < 20; ++rep) {
      Eigen::VectorXd b(7);
      for (Eigen::Index j = 0; j < b.size(); ++j) b[j] = normal(gen);
      const Eigen::VectorXd w = spline_weights(b);
      CHECK(std::abs(w.sum() - 1.0) < 1e-12);
      CHECK(w.minCoeff() > 0.0);
    }
  }
  SUBCASE("softmax is invariant under a joint logit shift") {
    Eigen::VectorXd b(4);
    b << 0.5, -1.0, 2.0, 0.1;
    const Eigen::VectorXd w = spline_weights(b);
    // Shifting all K_full logits (including the pinned zero) by c leaves the
    // weights unchanged; computed manually on the shifted full logits.
    const double c = 1.7;
    Eigen::VectorXd logits(5);
    logits[0] = c;
    for (Eigen::Index j = 0; j < b.size(); ++j) logits[j + 1] = b[j] + c;
    Eigen::VectorXd shifted = (logits.array() - logits.maxCoeff()).exp();
    shifted /= shifted.sum();
    CHECK(testutil::max_abs_diff(w, shifted) < 1e-14);
  }
  SUBCASE("extreme coefficients stay finite") {
    Eigen::VectorXd b(3);
    b << 600.0, -600.0, 0.0;
    const Eigen::VectorXd w = spline_weights(b);
    CHECK(std::isfinite(w.sum()));
    CHECK(std::abs(w.sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("spline density integrates to one") {
  BasisConfig cfg;
  cfg.K = 10;
  cfg.degree = 3;
  cfg.lo = -1.0;
  cfg.hi = 2.0;
  cfg.constraint = Constraint::drop_first_coef;
  const SplineDensity d = make_spline_density(cfg, PenaltyKind::difference);
  REQUIRE(d.norm_consts.size() == cfg.num_basis());

  std::mt19937_64 gen(17);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(cfg.K);
    if (rep > 0)
      for (Eigen::Index j = 0; j < b.size(); ++j) b[j] = normal(gen);
    const Eigen::VectorXd alpha = spline_weights(b);
    const auto f = [&](double x) {
      Eigen::VectorXd xv(1);
      xv << x;
      const Eigen::MatrixXd B = bspline_design_full(cfg, xv);
      double v = 0.0;
      for (int k = 0; k < cfg.num_basis(); ++k)
        v += alpha[k] * B(0, k) / d.norm_consts[k];
      return v;
    };
    const double integral = testutil::simpson(f, cfg.lo, cfg.hi, 4000);
    CHECK(std::abs(integral - 1.0) < 1e-6);
    // Non-negative combination of non-negative functions.
    for (double x = cfg.lo; x <= cfg.hi; x += 0.037)
      CHECK(f(x) >= 0.0);
  }
}

TEST_CASE("spline density requires the drop_first_coef constraint") {
  BasisConfig cfg;
  cfg.K = 8;
  cfg.degree = 3;
  CHECK_THROWS_AS(make_spline_density(cfg, PenaltyKind::difference),
                  ConfigError);
}

TEST_CASE("links") {
  for (Link link : {Link::identity, Link::log, Link::logit}) {
    for (double v : {0.12, 0.5, 0.93}) {
      const double eta = link_apply(link, v);
      CHECK(link_inverse(link, eta) == doctest::Approx(v).epsilon(1e-12));
      const double h = 1e-6;
      const double fd =
          (link_inverse(link, eta + h) - link_inverse(link, eta - h)) /
          (2.0 * h);
      CHECK(link_inverse_deriv(link, eta) ==
            doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("family metadata") {
  CHECK(family_n_params(Family::gaussian) == 2);
  CHECK(family_n_params(Family::gamma) == 2);
  CHECK(family_n_params(Family::vonmises) == 2);
  CHECK(family_n_params(Family::spline) == 0);
  CHECK(std::string(family_name(Family::gamma)) == "gamma");
  CHECK(std::string(family_param_name(Family::gaussian, 0)) == "mean");
  CHECK(family_default_link(Family::gaussian, 1) == Link::log);
}

TEST_CASE("predictor evaluation") {
  BasisConfig cfg;
  cfg.K = 6;
  cfg.degree = 3;
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd x(30);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = unif(gen);
  const Eigen::MatrixXd d1 = bspline_design(cfg, x);
  BasisConfig cfg2 = cfg;
  cfg2.K = 5;
  const Eigen::MatrixXd d2 = bspline_design(cfg2, x);

  SUBCASE("zero coefficients reduce to the intercept") {
    const Eigen::VectorXd eta = predictor_eval(
        0.7, {&d1}, {Eigen::VectorXd::Zero(6)}, static_cast<int>(x.size()));
    for (Eigen::Index t = 0; t < eta.size(); ++t)
      CHECK(eta[t] == doctest::Approx(0.7).epsilon(1e-14));
  }
  SUBCASE("a unit coefficient selects a design column") {
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(6);
    e1[0] = 1.0;
    const Eigen::VectorXd eta =
        predictor_eval(0.2, {&d1}, {e1}, static_cast<int>(x.size()));
    CHECK(testutil::max_abs_diff(eta.array() - 0.2, d1.col(0)) < 1e-14);
  }
  SUBCASE("two smooths equal the naive per-term sum") {
    std::normal_distribution<double> normal;
    Eigen::VectorXd b1(6), b2(5);
    for (Eigen::Index j = 0; j < 6; ++j) b1[j] = normal(gen);
    for (Eigen::Index j = 0; j < 5; ++j) b2[j] = normal(gen);
    const Eigen::VectorXd eta =
        predictor_eval(-0.4, {&d1, &d2}, {b1, b2}, static_cast<int>(x.size()));
    for (Eigen::Index t = 0; t < eta.size(); ++t) {
      double want = -0.4;
      for (Eigen::Index j = 0; j < 6; ++j) want += d1(t, j) * b1[j];
      for (Eigen::Index j = 0; j < 5; ++j) want += d2(t, j) * b2[j];
      CHECK(std::abs(eta[t] - want) < 1e-12);
    }
  }
  SUBCASE("shape mismatches are rejected") {
    CHECK_THROWS_AS(
        predictor_eval(0.0, {&d1}, {Eigen::VectorXd::Zero(5)},
                       static_cast<int>(x.size())),
        ArgumentError);
  }
}
