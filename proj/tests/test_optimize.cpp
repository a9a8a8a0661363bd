#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "splinehmm/errors.hpp"
#include "splinehmm/model.hpp"
#include "splinehmm/optimize.hpp"
#include "splinehmm/sim.hpp"
#include "testutil.hpp"

using namespace splinehmm;

namespace {

// Two-state gaussian model with constant transition probabilities, compiled
// against data simulated from the switching generator.
CompiledModel gaussian_two_state(const Dataset& data, const SimScenario& sc) {
  ModelSpec spec = study_model(sc, 8, 100.0);
  spec.smooths.clear();
  return CompiledModel::compile(spec, data);
}

int name_index(const CompiledModel& m, const std::string& name) {
  const auto& names = m.param_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  FAIL(("parameter not found: " + name));
  return -1;
}

// Two-state switching model on simulated data, one smooth per off-diagonal
// transition entry.
struct TpmFixture {
  Dataset data;
  ModelSpec spec;

  explicit TpmFixture(int T, int n_basis = 8, double lambda0 = 100.0) {
    SimScenario sc = testutil::benchmark_scenario(T, 17);
    data = simulate(sc, 1);
    spec = study_model(sc, n_basis, lambda0);
  }
};

}  // namespace

TEST_CASE("minimize on analytic objectives") {
  SUBCASE("strictly convex quadratic") {
    Eigen::MatrixXd A(3, 3);
    A << 4, 1, 0, 1, 3, 1, 0, 1, 2;
    Eigen::VectorXd c(3);
    c << 1.0, -2.0, 0.5;
    const Objective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
      g = A * (x - c);
      return 0.5 * (x - c).dot(A * (x - c));
    };
    const OptimResult r = minimize(f, Eigen::VectorXd::Zero(3));
    CHECK(r.converged);
    CHECK(testutil::max_abs_diff(r.theta, c) < 1e-6);
    CHECK(r.value < 1e-10);
    CHECK(r.inv_hessian.rows() == 3);
  }

  const Objective rosenbrock = [](const Eigen::VectorXd& x,
                                  Eigen::VectorXd& g) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    g.resize(2);
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;

  SUBCASE("rosenbrock with the dense update") {
    OptimOptions opt;
    opt.grad_tol = 1e-8;
    const OptimResult r = minimize(rosenbrock, x0, opt);
    CHECK(r.converged);
    CHECK(std::abs(r.theta[0] - 1.0) < 1e-5);
    CHECK(std::abs(r.theta[1] - 1.0) < 1e-5);
    CHECK(r.n_eval > r.n_iter);
  }
  SUBCASE("rosenbrock with limited memory") {
    OptimOptions opt;
    opt.grad_tol = 1e-8;
    opt.use_lbfgs = true;
    const OptimResult r = minimize(rosenbrock, x0, opt);
    CHECK(r.converged);
    CHECK(std::abs(r.theta[0] - 1.0) < 1e-5);
    CHECK(std::abs(r.theta[1] - 1.0) < 1e-5);
    CHECK(r.inv_hessian.size() == 0);
  }
  SUBCASE("starting at the optimum takes no steps") {
    Eigen::VectorXd opt_x(2);
    opt_x << 1.0, 1.0;
    const OptimResult r = minimize(rosenbrock, opt_x);
    CHECK(r.converged);
    CHECK(r.n_iter == 0);
    CHECK(r.n_eval == 1);
  }
  SUBCASE("iteration cap reports non-convergence") {
    OptimOptions opt;
    opt.max_iter = 1;
    opt.grad_tol = 1e-12;
    const OptimResult r = minimize(rosenbrock, x0, opt);
    CHECK_FALSE(r.converged);
    CHECK(r.n_iter == 1);
  }
  SUBCASE("non-finite start is rejected") {
    const Objective bad = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
      g = x;
      return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS_AS(minimize(bad, x0), NumericalError);
  }
}

TEST_CASE("homogeneous two-state fit recovers the generating emissions") {
  SimScenario sc = testutil::benchmark_scenario(800, 123);
  const Dataset data = simulate(sc, 1);
  const CompiledModel model = gaussian_two_state(data, sc);
  REQUIRE(model.dim() == 6);  // 2 means, 2 log-sds, 2 transition logits
  OptimOptions opt;
  opt.grad_tol = 1e-7;
  const PenalizedFit fit =
      fit_penalized(model, Eigen::VectorXd(), model.init_theta(), opt);
  CHECK(fit.converged);
  CHECK(fit.grad.norm() <= 1e-7 * std::max(1.0, std::abs(fit.pnll)) + 1e-12);
  CHECK(std::abs(fit.pnll - fit.nll) < 1e-12);  // no smooths, no penalty
  CHECK(std::abs(fit.nll - model.neg_loglik(fit.theta)) < 1e-10);

  // Generating emissions: means {1, 5}, sds {1, 3}.  Order by mean so the
  // check is independent of state labeling.
  double m1 = fit.theta[name_index(model, "y.mean[1]")];
  double m2 = fit.theta[name_index(model, "y.mean[2]")];
  double s1 = std::exp(fit.theta[name_index(model, "y.sd[1]")]);
  double s2 = std::exp(fit.theta[name_index(model, "y.sd[2]")]);
  if (m1 > m2) {
    std::swap(m1, m2);
    std::swap(s1, s2);
  }
  CHECK(std::abs(m1 - 1.0) < 0.3);
  CHECK(std::abs(m2 - 5.0) < 0.6);
  CHECK(std::abs(s1 - 1.0) < 0.3);
  CHECK(std::abs(s2 - 3.0) < 0.6);
}

TEST_CASE("barrier replaces an invalid likelihood") {
  SimScenario sc = testutil::benchmark_scenario(60, 5);
  const Dataset data = simulate(sc, 1);
  const CompiledModel model = gaussian_two_state(data, sc);
  Eigen::VectorXd theta = model.init_theta();
  theta[name_index(model, "y.sd[1]")] = 1000.0;  // exp overflows the scale
  CHECK(std::isinf(model.neg_loglik(theta)));
  const NllEval e = model.penalized_grad(theta, Eigen::VectorXd());
  CHECK_FALSE(e.ok);
  CHECK(e.value == doctest::Approx(1e10 + theta.squaredNorm()).epsilon(1e-12));
  CHECK(testutil::max_abs_diff(e.grad, (2.0 * theta).eval()) < 1e-12);
  CHECK_THROWS_AS(fit_penalized(model, Eigen::VectorXd(), theta),
                  NumericalError);
}

TEST_CASE("penalized objective pieces agree") {
  const TpmFixture fx(60);
  const CompiledModel model = CompiledModel::compile(fx.spec, fx.data);
  REQUIRE(model.smooths().size() == 2);
  const Eigen::VectorXd theta = [&] {
    Eigen::VectorXd th = model.init_theta();
    std::mt19937_64 gen(3);
    std::normal_distribution<double> nd(0.0, 0.05);
    for (Eigen::Index j = 0; j < th.size(); ++j) th[j] += nd(gen);
    return th;
  }();
  Eigen::VectorXd lambda(2);
  lambda << 12.0, 0.7;

  SUBCASE("value identity") {
    const Eigen::VectorXd quad = model.penalty_quad_forms(theta);
    const double manual =
        model.neg_loglik(theta) + 0.5 * lambda.dot(quad);
    CHECK(std::abs(model.penalized_nll(theta, lambda) - manual) < 1e-8);
  }
  SUBCASE("zero smoothing recovers the plain likelihood") {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
    CHECK(model.penalized_nll(theta, zero) ==
          doctest::Approx(model.neg_loglik(theta)).epsilon(1e-14));
  }
  SUBCASE("penalty gradient is lambda S b on each block") {
    const NllEval plain = model.neg_loglik_grad(theta);
    REQUIRE(plain.ok);
    const NllEval pen = model.penalized_grad(theta, lambda);
    REQUIRE(pen.ok);
    Eigen::VectorXd diff = pen.grad - plain.grad;
    for (int q = 0; q < 2; ++q) {
      const ParamBlock& blk = model.layout().blocks[q];
      const Eigen::VectorXd b = model.block(theta, q);
      const Eigen::VectorXd want = lambda[q] * (model.smooths()[q].term.S * b);
      CHECK(testutil::max_abs_diff(diff.segment(blk.offset, blk.size), want) <
            1e-10);
      diff.segment(blk.offset, blk.size).setZero();
    }
    CHECK(diff.norm() < 1e-12);  // fixed effects see no penalty
  }
  SUBCASE("analytic gradient matches central differences") {
    const NllEval e = model.penalized_grad(theta, lambda);
    REQUIRE(e.ok);
    Eigen::VectorXd th = theta;
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(theta[j]));
      th[j] = theta[j] + h;
      const double up = model.penalized_nll(th, lambda);
      th[j] = theta[j] - h;
      const double dn = model.penalized_nll(th, lambda);
      th[j] = theta[j];
      const double fd = (up - dn) / (2.0 * h);
      CHECK(std::abs(e.grad[j] - fd) / std::max(1.0, std::abs(fd)) < 1e-5);
    }
  }
  SUBCASE("mismatched lambda length is rejected") {
    CHECK_THROWS_AS(fit_penalized(model, Eigen::VectorXd::Ones(1), theta),
                    ArgumentError);
    Eigen::VectorXd neg(2);
    neg << 1.0, -1.0;
    CHECK_THROWS_AS(fit_penalized(model, neg, theta), ArgumentError);
  }
}

TEST_CASE("penalized fits on switching data") {
  const TpmFixture fx(120);
  const CompiledModel model = CompiledModel::compile(fx.spec, fx.data);
  const Eigen::VectorXd theta0 = model.init_theta();
  Eigen::VectorXd lambda(2);
  lambda << 100.0, 100.0;
  OptimOptions opt;
  opt.grad_tol = 1e-6;
  const PenalizedFit fit = fit_penalized(model, lambda, theta0, opt);
  REQUIRE(fit.converged);

  SUBCASE("reported objective splits into likelihood plus penalty") {
    CHECK(std::abs(fit.pnll - fit.nll -
                   model.penalty_value(fit.theta, lambda)) < 1e-8);
    CHECK(fit.pnll <= model.penalized_nll(theta0, lambda) + 1e-10);
  }
  SUBCASE("warm restart from the solution stops immediately") {
    const PenalizedFit again =
        fit_penalized(model, lambda, fit.theta, opt, &fit.inv_hessian);
    CHECK(again.n_iter <= 2);
    CHECK(std::abs(again.pnll - fit.pnll) < 1e-8);
  }
  SUBCASE("penalized information is symmetric and near positive definite") {
    const Eigen::MatrixXd J =
        penalized_hessian(model, fit.theta, lambda);
    CHECK(testutil::rel_frobenius(J, J.transpose().eval()) < 1e-12);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    CHECK(es.eigenvalues().minCoeff() >
          -1e-6 * es.eigenvalues().cwiseAbs().maxCoeff());
    // Passing the unpenalized part through gives the same matrix.
    const Eigen::MatrixXd J0 = unpenalized_hessian_fd(model, fit.theta);
    const Eigen::MatrixXd J2 = penalized_hessian(model, fit.theta, lambda, &J0);
    CHECK(testutil::rel_frobenius(J, J2) < 1e-12);
  }
  SUBCASE("heavy smoothing drives the quadratic forms to zero") {
    Eigen::VectorXd stiff(2);
    stiff << 1e8, 1e8;
    const PenalizedFit flat = fit_penalized(model, stiff, fit.theta, opt);
    const Eigen::VectorXd quad = model.penalty_quad_forms(flat.theta);
    CHECK(quad[0] < 1e-6);
    CHECK(quad[1] < 1e-6);
  }
}
