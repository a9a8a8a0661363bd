// Microbenchmarks for the kernels that dominate a fit: the forward
// recursion, design-matrix construction, the penalized gradient, and the
// smoothing-parameter update.
#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "splinehmm/basis.hpp"
#include "splinehmm/hmm.hpp"
#include "splinehmm/model.hpp"
#include "splinehmm/qreml.hpp"
#include "splinehmm/sim.hpp"

using namespace splinehmm;

namespace {

// Two-state switching generator with covariate-driven transitions; the same
// shape the simulation study uses.
SimScenario switching_scenario(int T) {
  using K = FunctionTerm::Kind;
  SimScenario sc;
  sc.n_states = 2;
  sc.T = T;
  sc.n_reps = 1;
  sc.seed = 42;
  sc.covariate = "z";
  SimStream stream;
  stream.name = "y";
  stream.family = Family::gaussian;
  stream.params = {{1.0, 5.0}, {1.0, 3.0}};
  sc.streams.push_back(stream);
  SimTpmEntry e12;
  e12.from = 0;
  e12.to = 1;
  e12.terms = {{K::constant, -2.0, 0.0},
               {K::sine, 1.0, 3.0},
               {K::exponential, 1.0, 1.5}};
  SimTpmEntry e21;
  e21.from = 1;
  e21.to = 0;
  e21.terms = {{K::constant, 2.0, 0.0},
               {K::cosine, 1.0, 4.0},
               {K::exponential, -2.0, 1.0}};
  sc.tpm = {e12, e21};
  return sc;
}

struct ForwardInstance {
  Eigen::VectorXd delta;
  TpmSequence tpm;
  EmissionMatrix em;
};

ForwardInstance forward_instance(int T, int N) {
  std::mt19937_64 gen(7 * T + N);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ForwardInstance inst;
  inst.delta.resize(N);
  for (int j = 0; j < N; ++j) inst.delta[j] = 0.2 + unif(gen);
  inst.delta /= inst.delta.sum();
  Eigen::MatrixXd g(N, N);
  for (int r = 0; r < N; ++r) {
    for (int c = 0; c < N; ++c) g(r, c) = 0.05 + unif(gen);
    g.row(r) /= g.row(r).sum();
  }
  inst.tpm = TpmSequence::constant(g, T);
  inst.em.logp.resize(T, N);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < N; ++j) inst.em.logp(t, j) = -4.0 * unif(gen);
  return inst;
}

void BM_forward(benchmark::State& state) {
  const int T = static_cast<int>(state.range(0));
  const int N = static_cast<int>(state.range(1));
  const ForwardInstance inst = forward_instance(T, N);
  for (auto _ : state)
    benchmark::DoNotOptimize(forward_loglik(inst.delta, inst.tpm, inst.em));
  state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_forward)
    ->Args({1000, 2})
    ->Args({1000, 4})
    ->Args({10000, 2})
    ->Args({10000, 4});

void BM_design(benchmark::State& state) {
  const int T = static_cast<int>(state.range(0));
  const int K = static_cast<int>(state.range(1));
  BasisConfig cfg;
  cfg.K = K;
  cfg.degree = 3;
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd x(T);
  for (int t = 0; t < T; ++t) x[t] = unif(gen);
  for (auto _ : state) benchmark::DoNotOptimize(bspline_design(cfg, x));
  state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_design)->Args({1000, 15})->Args({10000, 15})->Args({10000, 40});

void BM_penalized_grad(benchmark::State& state) {
  const int T = static_cast<int>(state.range(0));
  SimScenario sc = switching_scenario(T);
  const Dataset data = simulate(sc, 1);
  const CompiledModel model =
      CompiledModel::compile(study_model(sc, 15, 1000.0), data);
  const Eigen::VectorXd theta = model.init_theta();
  const Eigen::VectorXd lambda = model.lambda0();
  for (auto _ : state)
    benchmark::DoNotOptimize(model.penalized_grad(theta, lambda));
  state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_penalized_grad)->Arg(1000)->Arg(5000);

void BM_lambda_update(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  std::mt19937_64 gen(13);
  std::normal_distribution<double> norm(0.0, 1.0);
  Eigen::MatrixXd A(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) A(i, j) = norm(gen);
  const Eigen::MatrixXd J_p =
      A.transpose() * A + 0.5 * Eigen::MatrixXd::Identity(dim, dim);
  const int K = dim / 2;
  std::vector<BlockPenalty> blocks(2);
  for (int q = 0; q < 2; ++q) {
    blocks[q].offset = q * K;
    blocks[q].S = difference_penalty(K, 2, Constraint::none);
    blocks[q].nullspace_dim = 2;
  }
  const Eigen::VectorXd lambda = Eigen::VectorXd::Constant(2, 10.0);
  const Eigen::VectorXd quad = Eigen::VectorXd::Constant(2, 0.3);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        qreml_update(J_p, blocks, lambda, quad, 1e-8, 1e12));
}
BENCHMARK(BM_lambda_update)->Arg(16)->Arg(32)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
