#include "splinehmm/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "splinehmm/errors.hpp"
#include "splinehmm/hmm.hpp"
#include "splinehmm/rng.hpp"

namespace splinehmm {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Rng stream indices within a replicate.
constexpr std::uint64_t kStreamCovariate = 0;
constexpr std::uint64_t kStreamStates = 1;
constexpr std::uint64_t kStreamObsBase = 2;
}  // namespace

double eval_terms(const std::vector<FunctionTerm>& terms, double z) {
  double v = 0.0;
  for (const FunctionTerm& t : terms) {
    switch (t.kind) {
      case FunctionTerm::Kind::constant:
        v += t.a;
        break;
      case FunctionTerm::Kind::linear:
        v += t.a * z;
        break;
      case FunctionTerm::Kind::sine:
        v += t.a * std::sin(t.b * kPi * z);
        break;
      case FunctionTerm::Kind::cosine:
        v += t.a * std::cos(t.b * kPi * z);
        break;
      case FunctionTerm::Kind::exponential:
        v += t.a * std::exp(t.b * z);
        break;
    }
  }
  return v;
}

void SimScenario::validate() const {
  const int N = n_states;
  if (N < 2) throw ConfigError("scenario: need at least 2 states");
  if (T < 2) throw ConfigError("scenario: need at least 2 time points");
  if (n_reps < 1) throw ConfigError("scenario: n_reps must be positive");
  if (covariate.empty()) throw ConfigError("scenario: covariate needs a name");
  if (covariate == "time" || covariate == "true_state")
    throw ConfigError("scenario: covariate name '" + covariate +
                      "' collides with a generated column");
  if (law == CovariateLaw::supplied) {
    if (supplied_z.size() != T)
      throw ConfigError("scenario: supplied covariate has " +
                        std::to_string(supplied_z.size()) + " values, need " +
                        std::to_string(T));
    if (!supplied_z.allFinite())
      throw ConfigError("scenario: supplied covariate has non-finite values");
  }

  if (streams.empty()) throw ConfigError("scenario: need at least one stream");
  for (std::size_t s = 0; s < streams.size(); ++s) {
    const SimStream& st = streams[s];
    if (st.name.empty()) throw ConfigError("scenario: stream needs a name");
    if (st.name == "time" || st.name == "true_state" || st.name == covariate)
      throw ConfigError("scenario: stream name '" + st.name +
                        "' collides with another column");
    for (std::size_t r = 0; r < s; ++r)
      if (streams[r].name == st.name)
        throw ConfigError("scenario: duplicate stream name '" + st.name + "'");
    if (st.family == Family::spline)
      throw ConfigError("scenario: stream '" + st.name +
                        "' must use a parametric family");
    const int np = family_n_params(st.family);
    if (static_cast<int>(st.params.size()) != np)
      throw ConfigError("scenario: stream '" + st.name + "' needs " +
                        std::to_string(np) + " parameter rows");
    for (int p = 0; p < np; ++p)
      if (static_cast<int>(st.params[p].size()) != N)
        throw ConfigError("scenario: stream '" + st.name + "' parameter '" +
                          family_param_name(st.family, p) + "' needs " +
                          std::to_string(N) + " state values");
    for (int k = 0; k < N; ++k) {
      bool ok = true;
      switch (st.family) {
        case Family::gaussian:
          ok = std::isfinite(st.params[0][k]) && st.params[1][k] > 0.0 &&
               std::isfinite(st.params[1][k]);
          break;
        case Family::gamma:
          ok = st.params[0][k] > 0.0 && std::isfinite(st.params[0][k]) &&
               st.params[1][k] > 0.0 && std::isfinite(st.params[1][k]);
          break;
        case Family::vonmises:
          ok = std::isfinite(st.params[0][k]) && st.params[1][k] >= 0.0 &&
               std::isfinite(st.params[1][k]);
          break;
        case Family::spline:
          break;
      }
      if (!ok)
        throw ConfigError("scenario: stream '" + st.name +
                          "' has invalid parameters for state " +
                          std::to_string(k + 1));
    }
  }

  std::vector<char> seen(static_cast<std::size_t>(N) * N, 0);
  for (const SimTpmEntry& e : tpm) {
    if (e.from < 0 || e.from >= N || e.to < 0 || e.to >= N)
      throw ConfigError("scenario: transition entry indices out of range");
    if (e.from == e.to)
      throw ConfigError("scenario: transition entries are off-diagonal only");
    char& flag = seen[static_cast<std::size_t>(e.from) * N + e.to];
    if (flag)
      throw ConfigError("scenario: duplicate transition entry " +
                        std::to_string(e.from + 1) + "->" +
                        std::to_string(e.to + 1));
    flag = 1;
  }
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      if (i != j && !seen[static_cast<std::size_t>(i) * N + j])
        throw ConfigError("scenario: transition entry " +
                          std::to_string(i + 1) + "->" +
                          std::to_string(j + 1) + " is not specified");

  if (delta) {
    if (delta->size() != N)
      throw ConfigError("scenario: initial distribution needs " +
                        std::to_string(N) + " entries");
    if (!(delta->array() >= 0.0).all() || !delta->allFinite())
      throw ConfigError("scenario: initial distribution has invalid entries");
    if (std::abs(delta->sum() - 1.0) > 1e-8)
      throw ConfigError("scenario: initial distribution must sum to one");
  }
}

Eigen::MatrixXd SimScenario::tpm_at(double z) const {
  Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(n_states, n_states);
  for (const SimTpmEntry& e : tpm) eta(e.from, e.to) = eval_terms(e.terms, z);
  return tpm_multinomial(eta);
}

Dataset simulate(const SimScenario& scenario, int rep_index) {
  scenario.validate();
  if (rep_index < 1 || rep_index > scenario.n_reps)
    throw ArgumentError("simulate: replicate index out of range");
  const int T = scenario.T;
  const int N = scenario.n_states;
  const int S = static_cast<int>(scenario.streams.size());

  Eigen::VectorXd z(T);
  if (scenario.law == CovariateLaw::uniform01) {
    Rng rng(scenario.seed, static_cast<std::uint64_t>(rep_index),
            kStreamCovariate);
    for (int t = 0; t < T; ++t) z[t] = rng.uniform01();
  } else {
    z = scenario.supplied_z;
  }

  // Start from the stationary distribution of the average transition matrix
  // over the realized steps, matching the fitting convention.
  Eigen::VectorXd delta;
  if (scenario.delta) {
    delta = *scenario.delta / scenario.delta->sum();
  } else {
    Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(N, N);
    for (int t = 1; t < T; ++t) avg += scenario.tpm_at(z[t]);
    avg /= static_cast<double>(T - 1);
    delta = stationary(avg);
  }

  std::vector<int> state(T);
  {
    Rng rng(scenario.seed, static_cast<std::uint64_t>(rep_index),
            kStreamStates);
    state[0] = rng.categorical(delta);
    for (int t = 1; t < T; ++t) {
      const Eigen::MatrixXd gamma = scenario.tpm_at(z[t]);
      state[t] = rng.categorical(gamma.row(state[t - 1]).transpose());
    }
  }

  Dataset out;
  out.names.reserve(static_cast<std::size_t>(S) + 3);
  out.names.push_back("time");
  for (const SimStream& st : scenario.streams) out.names.push_back(st.name);
  out.names.push_back(scenario.covariate);
  out.names.push_back("true_state");
  out.values.resize(T, S + 3);

  for (int t = 0; t < T; ++t) out.values(t, 0) = t + 1;
  for (int s = 0; s < S; ++s) {
    const SimStream& st = scenario.streams[static_cast<std::size_t>(s)];
    Rng rng(scenario.seed, static_cast<std::uint64_t>(rep_index),
            kStreamObsBase + static_cast<std::uint64_t>(s));
    for (int t = 0; t < T; ++t) {
      const int k = state[t];
      double x = 0.0;
      switch (st.family) {
        case Family::gaussian:
          x = st.params[0][k] + st.params[1][k] * rng.normal();
          break;
        case Family::gamma: {
          const double m = st.params[0][k];
          const double sd = st.params[1][k];
          const double shape = (m / sd) * (m / sd);
          x = rng.gamma(shape, sd * sd / m);
          break;
        }
        case Family::vonmises:
          x = rng.vonmises(st.params[0][k], st.params[1][k]);
          break;
        case Family::spline:
          break;  // rejected by validate()
      }
      out.values(t, 1 + s) = x;
    }
  }
  for (int t = 0; t < T; ++t) {
    out.values(t, 1 + S) = z[t];
    out.values(t, 2 + S) = state[t] + 1;
  }
  return out;
}

ModelSpec study_model(const SimScenario& scenario, int n_basis,
                      double lambda0) {
  if (n_basis < 5)
    throw ConfigError("study: cubic transition smooths need at least 5 basis "
                      "functions");
  if (!(lambda0 > 0.0) || !std::isfinite(lambda0))
    throw ConfigError("study: initial smoothing parameter must be positive");
  ModelSpec ms;
  ms.n_states = scenario.n_states;
  ms.delta = DeltaPolicy::stationary;
  for (const SimStream& st : scenario.streams) {
    StreamSpec ss;
    ss.column = st.name;
    ss.family = st.family;
    ms.streams.push_back(std::move(ss));
  }
  for (int i = 0; i < scenario.n_states; ++i)
    for (int j = 0; j < scenario.n_states; ++j) {
      if (i == j) continue;
      SmoothSpec sp;
      sp.kind = SmoothTargetKind::tpm;
      sp.from = i;
      sp.to = j;
      sp.covariate = scenario.covariate;
      sp.basis.K = n_basis - 1;  // one coefficient absorbs into the intercept
      sp.basis.degree = 3;
      sp.basis.penalty_order = 2;
      sp.penalty = PenaltyKind::difference;
      sp.ident = Identifiability::drop_first;
      sp.lambda0 = lambda0;
      sp.domain_auto = true;
      ms.smooths.push_back(std::move(sp));
    }
  return ms;
}

void StudyConfig::validate() const {
  scenario.validate();
  if (T_values.empty()) throw ConfigError("study: no series lengths given");
  for (int t : T_values)
    if (t < 2) throw ConfigError("study: series lengths must be at least 2");
  if (n_reps < 1) throw ConfigError("study: n_reps must be positive");
  if (n_basis < 5)
    throw ConfigError("study: cubic transition smooths need at least 5 basis "
                      "functions");
  if (!(lambda0 > 0.0) || !std::isfinite(lambda0))
    throw ConfigError("study: initial smoothing parameter must be positive");
  if (grid_points < 2) throw ConfigError("study: need at least 2 grid points");
  if (jobs < 1) throw ConfigError("study: jobs must be positive");
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double w = h - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

namespace {

struct RepOutput {
  StudyRow row;
  std::vector<QremlTraceRow> trace;
  std::vector<Eigen::VectorXd> grid;   // per smooth
  std::vector<Eigen::VectorXd> truth;  // per smooth
  std::vector<Eigen::VectorXd> est;    // per smooth
};

RepOutput run_replicate(const StudyConfig& config, int T_value, int rep) {
  RepOutput out;
  out.row.T = T_value;
  out.row.rep = rep;
  out.row.nll = kNaN;
  SimScenario scen = config.scenario;
  scen.T = T_value;
  scen.n_reps = config.n_reps;
  try {
    const Dataset data = simulate(scen, rep);
    const ModelSpec ms = study_model(scen, config.n_basis, config.lambda0);
    const CompiledModel model = CompiledModel::compile(ms, data);
    const QremlFit fit =
        qreml_fit(model, model.init_theta(), model.lambda0(), config.qreml);
    out.row.converged = fit.converged;
    out.row.n_outer = fit.n_outer;
    out.row.nll = fit.nll;
    out.row.lambda = fit.lambda;
    out.row.edf = fit.edf;
    out.trace = fit.trace;

    const int p = static_cast<int>(model.smooths().size());
    out.row.rmse.resize(p);
    out.grid.resize(p);
    out.truth.resize(p);
    out.est.resize(p);
    for (int q = 0; q < p; ++q) {
      const CompiledSmooth& sm = model.smooths()[static_cast<std::size_t>(q)];
      const int G = config.grid_points;
      Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(
          G, sm.spec.basis.lo, sm.spec.basis.hi);
      Eigen::VectorXd truth(G);
      for (int g = 0; g < G; ++g)
        truth[g] = scen.tpm_at(grid[g])(sm.spec.from, sm.spec.to);
      Eigen::VectorXd est = model.tpm_curve(q, grid, fit.theta);
      out.row.rmse[q] = std::sqrt((est - truth).squaredNorm() /
                                  static_cast<double>(G));
      out.grid[q] = std::move(grid);
      out.truth[q] = std::move(truth);
      out.est[q] = std::move(est);
    }
  } catch (const std::exception& e) {
    out.row.failed = true;
    out.row.error = e.what();
    out.trace.clear();
    out.grid.clear();
    out.truth.clear();
    out.est.clear();
  }
  return out;
}

}  // namespace

StudyReport run_study(const StudyConfig& config) {
  config.validate();
  const int N = config.scenario.n_states;
  const int p = N * (N - 1);

  StudyReport report;
  report.smooth_labels.reserve(static_cast<std::size_t>(p));
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      if (i != j)
        report.smooth_labels.push_back(
            "s(" + config.scenario.covariate + "):tpm[" +
            std::to_string(i + 1) + "->" + std::to_string(j + 1) + "]");

  struct Task {
    int T = 0;
    int rep = 0;
  };
  std::vector<Task> tasks;
  tasks.reserve(config.T_values.size() *
                static_cast<std::size_t>(config.n_reps));
  for (int tv : config.T_values)
    for (int rep = 1; rep <= config.n_reps; ++rep) tasks.push_back({tv, rep});

  // Results land in indexed slots so the output is identical for any number
  // of worker threads.
  std::vector<RepOutput> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      results[i] = run_replicate(config, tasks[i].T, tasks[i].rep);
    }
  };
  const int jobs = std::min<int>(config.jobs,
                                 static_cast<int>(tasks.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs) - 1);
    for (int w = 1; w < jobs; ++w) pool.emplace_back(worker);
    worker();
    for (std::thread& th : pool) th.join();
  }

  report.rows.reserve(results.size());
  for (const RepOutput& r : results) report.rows.push_back(r.row);

  // Per-replicate table.
  {
    Dataset& tab = report.rows_table;
    tab.names = {"T", "rep", "failed", "converged", "n_outer", "nll"};
    for (const char* base : {"lambda", "edf", "rmse"})
      for (int q = 1; q <= p; ++q)
        tab.names.push_back(std::string(base) + std::to_string(q));
    tab.values.resize(static_cast<Eigen::Index>(results.size()),
                      static_cast<Eigen::Index>(tab.names.size()));
    for (std::size_t i = 0; i < results.size(); ++i) {
      const StudyRow& row = results[i].row;
      Eigen::Index c = 0;
      auto put = [&](double v) { tab.values(static_cast<Eigen::Index>(i), c++) = v; };
      put(row.T);
      put(row.rep);
      put(row.failed ? 1.0 : 0.0);
      put(row.converged ? 1.0 : 0.0);
      put(row.failed ? kNaN : row.n_outer);
      put(row.nll);
      for (const Eigen::VectorXd* vec : {&row.lambda, &row.edf, &row.rmse})
        for (int q = 0; q < p; ++q)
          put(vec->size() == p ? (*vec)[q] : kNaN);
    }
  }

  // Smoothing-parameter path, long format.
  {
    Dataset& tab = report.trace_table;
    tab.names = {"T",    "rep",          "outer",           "polish",
                 "pnll", "nll",          "inner_iters",     "inner_converged",
                 "max_rel_change"};
    for (int q = 1; q <= p; ++q)
      tab.names.push_back("lambda" + std::to_string(q));
    std::size_t n_rows = 0;
    for (const RepOutput& r : results) n_rows += r.trace.size();
    tab.values.resize(static_cast<Eigen::Index>(n_rows),
                      static_cast<Eigen::Index>(tab.names.size()));
    Eigen::Index i = 0;
    for (const RepOutput& r : results)
      for (const QremlTraceRow& tr : r.trace) {
        Eigen::Index c = 0;
        auto put = [&](double v) { tab.values(i, c++) = v; };
        put(r.row.T);
        put(r.row.rep);
        put(tr.outer);
        put(tr.polish ? 1.0 : 0.0);
        put(tr.pnll);
        put(tr.nll);
        put(tr.inner_iters);
        put(tr.inner_converged ? 1.0 : 0.0);
        put(tr.max_rel_change);
        for (int q = 0; q < p; ++q)
          put(tr.lambda.size() == p ? tr.lambda[q] : kNaN);
        ++i;
      }
  }

  // Fitted transition curves against the truth, long format.
  {
    Dataset& tab = report.curve_table;
    tab.names = {"T", "rep", "curve", "z", "truth", "estimate"};
    std::size_t n_rows = 0;
    for (const RepOutput& r : results)
      for (const Eigen::VectorXd& g : r.grid)
        n_rows += static_cast<std::size_t>(g.size());
    tab.values.resize(static_cast<Eigen::Index>(n_rows), 6);
    Eigen::Index i = 0;
    for (const RepOutput& r : results)
      for (std::size_t q = 0; q < r.grid.size(); ++q)
        for (Eigen::Index g = 0; g < r.grid[q].size(); ++g) {
          tab.values(i, 0) = r.row.T;
          tab.values(i, 1) = r.row.rep;
          tab.values(i, 2) = static_cast<double>(q + 1);
          tab.values(i, 3) = r.grid[q][g];
          tab.values(i, 4) = r.truth[q][g];
          tab.values(i, 5) = r.est[q][g];
          ++i;
        }
  }

  for (int tv : config.T_values) {
    StudyAggregate agg;
    agg.T = tv;
    std::vector<double> outers;
    std::vector<std::vector<double>> rmse(static_cast<std::size_t>(p));
    for (const StudyRow& row : report.rows) {
      if (row.T != tv) continue;
      ++agg.n_total;
      if (row.failed) {
        ++agg.n_failed;
        continue;
      }
      if (row.converged) ++agg.n_converged;
      outers.push_back(row.n_outer);
      for (int q = 0; q < p && q < row.rmse.size(); ++q)
        rmse[static_cast<std::size_t>(q)].push_back(row.rmse[q]);
    }
    agg.convergence_rate =
        agg.n_total > 0
            ? static_cast<double>(agg.n_converged) / agg.n_total
            : kNaN;
    agg.median_outer = median(outers);
    agg.median_rmse.resize(p);
    agg.q25_rmse.resize(p);
    agg.q75_rmse.resize(p);
    for (int q = 0; q < p; ++q) {
      agg.median_rmse[q] = median(rmse[static_cast<std::size_t>(q)]);
      agg.q25_rmse[q] = quantile(rmse[static_cast<std::size_t>(q)], 0.25);
      agg.q75_rmse[q] = quantile(rmse[static_cast<std::size_t>(q)], 0.75);
    }
    report.aggregates.push_back(std::move(agg));
  }
  return report;
}

}  // namespace splinehmm
