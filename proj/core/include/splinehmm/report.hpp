#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "splinehmm/dataset.hpp"
#include "splinehmm/model.hpp"
#include "splinehmm/model_json.hpp"
#include "splinehmm/qreml.hpp"

namespace splinehmm {

// One coefficient on the working (link/logit) scale.  natural and natural_se
// are filled for stream-parameter intercepts only: the inverse-link value and
// its delta-method standard error.
struct ParameterRow {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;  // NaN when the conditional covariance is unusable
  std::optional<double> natural;
  std::optional<double> natural_se;
};

// Everything the fit command persists.  The document round-trips through
// parse_fit_report / format_fit_report without loss and contains the fitted
// model (spec, transforms, theta), so it doubles as the decode input.
struct FitReport {
  ModelFile model;
  SmoothTransforms transforms;
  Eigen::VectorXd theta;
  Eigen::VectorXd lambda;
  std::vector<std::string> smooth_labels;
  Eigen::VectorXd edf;
  double total_df = 0.0;
  double loglik = 0.0;  // maximized unpenalized log likelihood
  double penalized_nll = 0.0;
  double caic = 0.0;
  double cbic = 0.0;
  std::optional<double> marginal_loglik;
  bool converged = false;
  int n_outer = 0;
  int n_eval = 0;
  std::vector<QremlTraceRow> trace;
  std::vector<ParameterRow> parameters;
  double runtime_seconds = 0.0;
  int n_obs = 0;
};

FitReport build_fit_report(const CompiledModel& model, const QremlFit& fit,
                           const QremlOptions& options,
                           double runtime_seconds);

std::string format_fit_report(const FitReport& report, int indent = 2);
FitReport parse_fit_report(const std::string& text);

// Decoded states: time, state (Viterbi, 1-based), p_state1..N (smoothing
// probabilities).
Dataset decode_table(const CompiledModel& model, const Eigen::VectorXd& theta);

// Smooth functions on a grid with 95% conditional bands: smooth (1-based id),
// z, value, se, lo, hi, gamma (transition probability; NaN for other
// targets).  value is the predictor-scale contribution, or the density for
// density smooths.
Dataset curve_table(const CompiledModel& model, const QremlFit& fit,
                    int grid_points = 200);

// Smoothing-parameter path of one fit: outer, polish, pnll, nll,
// inner_iters, inner_converged, max_rel_change, lambda1..p.
Dataset trace_table(const QremlFit& fit);

}  // namespace splinehmm
