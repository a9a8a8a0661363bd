#include "splinehmm/report.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "json_util.hpp"
#include "splinehmm/emission.hpp"
#include "splinehmm/errors.hpp"
#include "splinehmm/hmm.hpp"

namespace splinehmm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Two-sided 95% normal quantile.
constexpr double kZ95 = 1.959963984540054;

using jsonutil::Json;

Json num_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

Json opt_or_null(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

double num_or_nan(const Json& v, const std::string& path) {
  if (v.is_null()) return kNaN;
  return jsonutil::get_num(v, path);
}

std::optional<double> opt_from(const Json& v, const std::string& path) {
  if (v.is_null()) return std::nullopt;
  return jsonutil::get_num(v, path);
}

}  // namespace

FitReport build_fit_report(const CompiledModel& model, const QremlFit& fit,
                           const QremlOptions& options,
                           double runtime_seconds) {
  FitReport r;
  r.model.spec = model.spec();
  r.model.qreml = options;
  r.transforms = model.transforms();
  r.theta = fit.theta;
  r.lambda = fit.lambda;
  for (const CompiledSmooth& sm : model.smooths())
    r.smooth_labels.push_back(sm.label);
  r.edf = fit.edf;
  r.total_df = fit.total_df;
  r.loglik = -fit.nll;
  r.penalized_nll = fit.pnll;
  r.caic = fit.caic;
  r.cbic = fit.cbic;
  r.marginal_loglik = fit.marginal_loglik;
  r.converged = fit.converged;
  r.n_outer = fit.n_outer;
  r.n_eval = fit.n_eval;
  r.trace = fit.trace;
  r.runtime_seconds = runtime_seconds;
  r.n_obs = model.T();

  const int d = model.dim();
  Eigen::MatrixXd cov;
  if (fit.J_p.rows() == d && fit.J_p.cols() == d && fit.J_p.allFinite()) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(fit.J_p);
    if (ldlt.info() == Eigen::Success) {
      cov = ldlt.solve(Eigen::MatrixXd::Identity(d, d));
      if (!cov.allFinite()) cov.resize(0, 0);
    }
  }
  const auto se_at = [&](int i) {
    if (cov.rows() != d) return kNaN;
    const double v = cov(i, i);
    return v > 0.0 ? std::sqrt(v) : kNaN;
  };

  r.parameters.resize(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    ParameterRow& row = r.parameters[static_cast<std::size_t>(i)];
    row.name = model.param_names()[static_cast<std::size_t>(i)];
    row.estimate = fit.theta[i];
    row.se = se_at(i);
  }
  // Natural-scale values for constant stream parameters.
  for (const CompiledStream& cs : model.streams())
    for (const auto& per_state : cs.params)
      for (const CompiledParam& cp : per_state) {
        if (!cp.smooth_ids.empty()) continue;
        ParameterRow& row =
            r.parameters[static_cast<std::size_t>(cp.intercept)];
        const double eta = fit.theta[cp.intercept];
        row.natural = link_inverse(cp.link, eta);
        if (!std::isnan(row.se))
          row.natural_se = std::abs(link_inverse_deriv(cp.link, eta)) * row.se;
      }
  return r;
}

std::string format_fit_report(const FitReport& report, int indent) {
  Json j = Json::object();
  j["schema"] = kReportSchema;
  j["converged"] = report.converged;
  j["n_outer"] = report.n_outer;
  j["n_eval"] = report.n_eval;
  j["loglik"] = num_or_null(report.loglik);
  j["penalized_nll"] = num_or_null(report.penalized_nll);
  j["total_df"] = num_or_null(report.total_df);
  j["caic"] = num_or_null(report.caic);
  j["cbic"] = num_or_null(report.cbic);
  j["marginal_loglik_approx"] = opt_or_null(report.marginal_loglik);
  j["runtime_seconds"] = report.runtime_seconds;
  j["n_obs"] = report.n_obs;

  Json smooths = Json::array();
  for (std::size_t q = 0; q < report.smooth_labels.size(); ++q) {
    Json sj = Json::object();
    sj["label"] = report.smooth_labels[q];
    sj["lambda"] = num_or_null(
        static_cast<Eigen::Index>(q) < report.lambda.size()
            ? report.lambda[static_cast<Eigen::Index>(q)]
            : kNaN);
    sj["edf"] = num_or_null(static_cast<Eigen::Index>(q) < report.edf.size()
                                ? report.edf[static_cast<Eigen::Index>(q)]
                                : kNaN);
    smooths.push_back(std::move(sj));
  }
  j["smooths"] = std::move(smooths);

  Json trace = Json::array();
  for (const QremlTraceRow& tr : report.trace) {
    Json tj = Json::object();
    tj["outer"] = tr.outer;
    tj["polish"] = tr.polish;
    tj["pnll"] = num_or_null(tr.pnll);
    tj["nll"] = num_or_null(tr.nll);
    tj["inner_iters"] = tr.inner_iters;
    tj["inner_converged"] = tr.inner_converged;
    tj["max_rel_change"] = num_or_null(tr.max_rel_change);
    tj["lambda"] = jsonutil::vec_to_json(tr.lambda);
    trace.push_back(std::move(tj));
  }
  j["trace"] = std::move(trace);

  Json params = Json::array();
  for (const ParameterRow& pr : report.parameters) {
    Json pj = Json::object();
    pj["name"] = pr.name;
    pj["estimate"] = num_or_null(pr.estimate);
    pj["se"] = num_or_null(pr.se);
    pj["natural"] = opt_or_null(pr.natural);
    pj["natural_se"] = opt_or_null(pr.natural_se);
    params.push_back(std::move(pj));
  }
  j["parameters"] = std::move(params);

  j["model"] = jsonutil::model_file_to_json(report.model);
  j["transforms"] = jsonutil::transforms_to_json(report.transforms);
  j["theta"] = jsonutil::vec_to_json(report.theta);
  j["lambda"] = jsonutil::vec_to_json(report.lambda);
  return j.dump(indent) + "\n";
}

FitReport parse_fit_report(const std::string& text) {
  const Json j = jsonutil::parse_text(text, "report");
  const std::string path = "report";
  jsonutil::check_keys(
      j, path,
      {"schema", "converged", "n_outer", "n_eval", "loglik", "penalized_nll",
       "total_df", "caic", "cbic", "marginal_loglik_approx", "runtime_seconds",
       "n_obs", "smooths", "trace", "parameters", "model", "transforms",
       "theta", "lambda"});
  jsonutil::require_schema(j, path, kReportSchema);
  FitReport r;
  r.converged = jsonutil::get_bool(jsonutil::require_key(j, path, "converged"),
                                   path + ".converged");
  r.n_outer = jsonutil::get_int(jsonutil::require_key(j, path, "n_outer"),
                                path + ".n_outer");
  r.n_eval = jsonutil::get_int(jsonutil::require_key(j, path, "n_eval"),
                               path + ".n_eval");
  r.loglik = num_or_nan(jsonutil::require_key(j, path, "loglik"),
                        path + ".loglik");
  r.penalized_nll = num_or_nan(
      jsonutil::require_key(j, path, "penalized_nll"), path + ".penalized_nll");
  r.total_df = num_or_nan(jsonutil::require_key(j, path, "total_df"),
                          path + ".total_df");
  r.caic = num_or_nan(jsonutil::require_key(j, path, "caic"), path + ".caic");
  r.cbic = num_or_nan(jsonutil::require_key(j, path, "cbic"), path + ".cbic");
  r.marginal_loglik =
      opt_from(jsonutil::require_key(j, path, "marginal_loglik_approx"),
               path + ".marginal_loglik_approx");
  r.runtime_seconds =
      num_or_nan(jsonutil::require_key(j, path, "runtime_seconds"),
                 path + ".runtime_seconds");
  r.n_obs = jsonutil::get_int(jsonutil::require_key(j, path, "n_obs"),
                              path + ".n_obs");

  const Json& smooths = jsonutil::require_key(j, path, "smooths");
  if (!smooths.is_array()) jsonutil::fail(path + ".smooths", "expected array");
  r.edf.resize(static_cast<Eigen::Index>(smooths.size()));
  for (std::size_t q = 0; q < smooths.size(); ++q) {
    const std::string spath =
        path + ".smooths[" + std::to_string(q + 1) + "]";
    const Json& sj = smooths[q];
    jsonutil::check_keys(sj, spath, {"label", "lambda", "edf"});
    r.smooth_labels.push_back(
        jsonutil::get_str(jsonutil::require_key(sj, spath, "label"),
                          spath + ".label"));
    r.edf[static_cast<Eigen::Index>(q)] = num_or_nan(
        jsonutil::require_key(sj, spath, "edf"), spath + ".edf");
  }

  const Json& trace = jsonutil::require_key(j, path, "trace");
  if (!trace.is_array()) jsonutil::fail(path + ".trace", "expected array");
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const std::string tpath = path + ".trace[" + std::to_string(t + 1) + "]";
    const Json& tj = trace[t];
    jsonutil::check_keys(tj, tpath,
                         {"outer", "polish", "pnll", "nll", "inner_iters",
                          "inner_converged", "max_rel_change", "lambda"});
    QremlTraceRow tr;
    tr.outer = jsonutil::get_int(jsonutil::require_key(tj, tpath, "outer"),
                                 tpath + ".outer");
    tr.polish = jsonutil::get_bool(jsonutil::require_key(tj, tpath, "polish"),
                                   tpath + ".polish");
    tr.pnll = num_or_nan(jsonutil::require_key(tj, tpath, "pnll"),
                         tpath + ".pnll");
    tr.nll = num_or_nan(jsonutil::require_key(tj, tpath, "nll"),
                        tpath + ".nll");
    tr.inner_iters =
        jsonutil::get_int(jsonutil::require_key(tj, tpath, "inner_iters"),
                          tpath + ".inner_iters");
    tr.inner_converged =
        jsonutil::get_bool(jsonutil::require_key(tj, tpath, "inner_converged"),
                           tpath + ".inner_converged");
    tr.max_rel_change =
        num_or_nan(jsonutil::require_key(tj, tpath, "max_rel_change"),
                   tpath + ".max_rel_change");
    tr.lambda = jsonutil::vec_from_json(
        jsonutil::require_key(tj, tpath, "lambda"), tpath + ".lambda");
    r.trace.push_back(std::move(tr));
  }

  const Json& params = jsonutil::require_key(j, path, "parameters");
  if (!params.is_array())
    jsonutil::fail(path + ".parameters", "expected array");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string ppath =
        path + ".parameters[" + std::to_string(i + 1) + "]";
    const Json& pj = params[i];
    jsonutil::check_keys(pj, ppath,
                         {"name", "estimate", "se", "natural", "natural_se"});
    ParameterRow pr;
    pr.name = jsonutil::get_str(jsonutil::require_key(pj, ppath, "name"),
                                ppath + ".name");
    pr.estimate = num_or_nan(jsonutil::require_key(pj, ppath, "estimate"),
                             ppath + ".estimate");
    pr.se = num_or_nan(jsonutil::require_key(pj, ppath, "se"), ppath + ".se");
    pr.natural = opt_from(jsonutil::require_key(pj, ppath, "natural"),
                          ppath + ".natural");
    pr.natural_se = opt_from(jsonutil::require_key(pj, ppath, "natural_se"),
                             ppath + ".natural_se");
    r.parameters.push_back(std::move(pr));
  }

  r.model = jsonutil::model_file_from_json(
      jsonutil::require_key(j, path, "model"), path + ".model");
  r.transforms = jsonutil::transforms_from_json(
      jsonutil::require_key(j, path, "transforms"), path + ".transforms");
  r.theta = jsonutil::vec_from_json(jsonutil::require_key(j, path, "theta"),
                                    path + ".theta");
  r.lambda = jsonutil::vec_from_json(jsonutil::require_key(j, path, "lambda"),
                                     path + ".lambda");
  if (r.smooth_labels.size() != static_cast<std::size_t>(r.lambda.size()))
    jsonutil::fail(path, "smooths and lambda disagree in length");
  return r;
}

Dataset decode_table(const CompiledModel& model,
                     const Eigen::VectorXd& theta) {
  const TpmSequence tpm = model.build_tpm(theta);
  const EmissionMatrix em = model.build_emissions(theta);
  const Eigen::VectorXd delta = model.initial_distribution(theta, tpm);
  const std::vector<int> path = viterbi(delta, tpm, em);
  const ForwardBackward fb = forward_backward(delta, tpm, em);

  const int T = model.T();
  const int N = model.n_states();
  Dataset out;
  out.names = {"time", "state"};
  for (int i = 0; i < N; ++i)
    out.names.push_back("p_state" + std::to_string(i + 1));
  out.values.resize(T, 2 + N);
  for (int t = 0; t < T; ++t) {
    out.values(t, 0) = t + 1;
    out.values(t, 1) = path[static_cast<std::size_t>(t)] + 1;
    for (int i = 0; i < N; ++i) out.values(t, 2 + i) = fb.posterior(t, i);
  }
  return out;
}

Dataset curve_table(const CompiledModel& model, const QremlFit& fit,
                    int grid_points) {
  if (grid_points < 2) throw ArgumentError("curve grid needs at least 2 points");
  const int p = static_cast<int>(model.smooths().size());
  const int d = model.dim();
  Eigen::MatrixXd cov;
  if (fit.J_p.rows() == d && fit.J_p.cols() == d && fit.J_p.allFinite()) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(fit.J_p);
    if (ldlt.info() == Eigen::Success) {
      cov = ldlt.solve(Eigen::MatrixXd::Identity(d, d));
      if (!cov.allFinite()) cov.resize(0, 0);
    }
  }

  Dataset out;
  out.names = {"smooth", "z", "value", "se", "lo", "hi", "gamma"};
  out.values.resize(static_cast<Eigen::Index>(p) * grid_points, 7);
  Eigen::Index row = 0;
  for (int q = 0; q < p; ++q) {
    const CompiledSmooth& sm = model.smooths()[static_cast<std::size_t>(q)];
    const ParamBlock& blk = model.layout().blocks[static_cast<std::size_t>(q)];
    const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(
        grid_points, sm.spec.basis.lo, sm.spec.basis.hi);
    const Eigen::VectorXd value = model.smooth_curve(q, grid, fit.theta);
    const Eigen::MatrixXd rows = model.smooth_design_at(q, grid);
    Eigen::VectorXd gamma = Eigen::VectorXd::Constant(grid_points, kNaN);
    if (sm.spec.kind == SmoothTargetKind::tpm)
      gamma = model.tpm_curve(q, grid, fit.theta);

    Eigen::MatrixXd cb;
    if (cov.rows() == d)
      cb = cov.block(blk.offset, blk.offset, blk.size, blk.size);
    for (int g = 0; g < grid_points; ++g) {
      double se = kNaN;
      if (cb.rows() == blk.size) {
        Eigen::VectorXd dir;
        if (sm.spec.kind == SmoothTargetKind::density) {
          // value = row . alpha(b); d alpha_k / d b_j = alpha_k (1{k=j+1} -
          // alpha_{j+1}) gives dir_j = alpha_{j+1} (row_{j+1} - value).
          const Eigen::VectorXd alpha =
              spline_weights(fit.theta.segment(blk.offset, blk.size));
          dir.resize(blk.size);
          for (int k = 0; k < blk.size; ++k)
            dir[k] = alpha[k + 1] * (rows(g, k + 1) - value[g]);
        } else {
          dir = rows.row(g).transpose();
        }
        const double var = dir.dot(cb * dir);
        if (var >= 0.0 && std::isfinite(var)) se = std::sqrt(var);
      }
      out.values(row, 0) = q + 1;
      out.values(row, 1) = grid[g];
      out.values(row, 2) = value[g];
      out.values(row, 3) = se;
      out.values(row, 4) = value[g] - kZ95 * se;
      out.values(row, 5) = value[g] + kZ95 * se;
      out.values(row, 6) = gamma[g];
      ++row;
    }
  }
  return out;
}

Dataset trace_table(const QremlFit& fit) {
  const int p = static_cast<int>(fit.lambda.size());
  Dataset out;
  out.names = {"outer",           "polish",         "pnll",
               "nll",             "inner_iters",    "inner_converged",
               "max_rel_change"};
  for (int q = 1; q <= p; ++q)
    out.names.push_back("lambda" + std::to_string(q));
  out.values.resize(static_cast<Eigen::Index>(fit.trace.size()),
                    static_cast<Eigen::Index>(out.names.size()));
  for (std::size_t t = 0; t < fit.trace.size(); ++t) {
    const QremlTraceRow& tr = fit.trace[t];
    const Eigen::Index i = static_cast<Eigen::Index>(t);
    out.values(i, 0) = tr.outer;
    out.values(i, 1) = tr.polish ? 1.0 : 0.0;
    out.values(i, 2) = tr.pnll;
    out.values(i, 3) = tr.nll;
    out.values(i, 4) = tr.inner_iters;
    out.values(i, 5) = tr.inner_converged ? 1.0 : 0.0;
    out.values(i, 6) = tr.max_rel_change;
    for (int q = 0; q < p; ++q)
      out.values(i, 7 + q) = tr.lambda.size() == p ? tr.lambda[q] : kNaN;
  }
  return out;
}

}  // namespace splinehmm
