#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "splinehmm/dataset.hpp"
#include "splinehmm/emission.hpp"
#include "splinehmm/model.hpp"
#include "splinehmm/qreml.hpp"

namespace splinehmm {

// Analytic building block of a generator predictor:
// constant a; linear a*z; sine a*sin(b*pi*z); cosine a*cos(b*pi*z);
// exponential a*exp(b*z).
struct FunctionTerm {
  enum class Kind { constant, linear, sine, cosine, exponential };
  Kind kind = Kind::constant;
  double a = 0.0;
  double b = 0.0;
};

double eval_terms(const std::vector<FunctionTerm>& terms, double z);

struct SimTpmEntry {
  int from = 0;
  int to = 0;  // 0-based, off-diagonal
  std::vector<FunctionTerm> terms;  // logit scale
};

struct SimStream {
  std::string name;
  Family family = Family::gaussian;
  std::vector<std::vector<double>> params;  // [param][state], natural scale
};

enum class CovariateLaw { uniform01, supplied };

struct SimScenario {
  int n_states = 2;
  int T = 1000;
  int n_reps = 1;
  std::uint64_t seed = 1;
  CovariateLaw law = CovariateLaw::uniform01;
  std::string covariate = "z";
  Eigen::VectorXd supplied_z;  // used when law == supplied
  std::vector<SimStream> streams;
  std::vector<SimTpmEntry> tpm;  // every off-diagonal entry, exactly once
  std::optional<Eigen::VectorXd> delta;  // overrides the stationary start

  void validate() const;
  // Transition matrix at a covariate value (row-wise multinomial logit).
  Eigen::MatrixXd tpm_at(double z) const;
};

// One replicate, bit-reproducible from (scenario.seed, rep_index).
// Columns: time, the streams, the covariate, true_state (1-based).
Dataset simulate(const SimScenario& scenario, int rep_index);

// The fitting model used by the study: one smooth per off-diagonal t.p.m.
// entry on the scenario covariate, automatic domain, n_basis functions.
ModelSpec study_model(const SimScenario& scenario, int n_basis,
                      double lambda0);

struct StudyConfig {
  SimScenario scenario;  // scenario.T is overridden by each grid entry
  std::vector<int> T_values;
  int n_reps = 50;
  int n_basis = 15;
  double lambda0 = 1000.0;
  QremlOptions qreml;  // constructed with the study defaults below
  int grid_points = 200;
  int jobs = 1;

  StudyConfig() {
    qreml.tol = 1e-5;
    qreml.max_outer = 60;
  }
  void validate() const;
};

struct StudyRow {
  int T = 0;
  int rep = 0;  // 1-based
  bool failed = false;
  std::string error;
  bool converged = false;
  int n_outer = 0;
  double nll = 0.0;
  Eigen::VectorXd lambda;
  Eigen::VectorXd edf;
  Eigen::VectorXd rmse;  // fitted transition curve vs truth, per smooth
};

struct StudyAggregate {
  int T = 0;
  int n_total = 0;
  int n_failed = 0;
  int n_converged = 0;
  double convergence_rate = 0.0;
  double median_outer = 0.0;
  Eigen::VectorXd median_rmse;
  Eigen::VectorXd q25_rmse;
  Eigen::VectorXd q75_rmse;
};

struct StudyReport {
  std::vector<std::string> smooth_labels;
  std::vector<StudyRow> rows;               // ordered by (T grid, rep)
  std::vector<StudyAggregate> aggregates;   // in T_values order
  Dataset rows_table;   // one row per replicate
  Dataset trace_table;  // long format: smoothing-parameter path per fit
  Dataset curve_table;  // long format: fitted curves against the truth
};

double median(std::vector<double> v);
double quantile(std::vector<double> v, double q);

// Runs all replicates (config.jobs worker threads); per-replicate failures
// are recorded in the rows, never fatal.  Output is independent of the
// thread count.
StudyReport run_study(const StudyConfig& config);

}  // namespace splinehmm
