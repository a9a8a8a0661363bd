#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "splinehmm/csv.hpp"
#include "splinehmm/errors.hpp"
#include "splinehmm/model.hpp"
#include "splinehmm/model_json.hpp"
#include "splinehmm/qreml.hpp"
#include "splinehmm/report.hpp"
#include "splinehmm/rng.hpp"
#include "splinehmm/sim.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;
using namespace splinehmm;

namespace {

// Exit codes: 0 ok, 2 input error, 3 non-convergence, 4 numerical failure.
constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNoConverge = 3;
constexpr int kExitNumerical = 4;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InputError("cannot write '" + p.string() + "'");
  out << content;
  out.flush();
  if (!out) throw InputError("short write to '" + p.string() + "'");
}

fs::path resolve_out_dir(const std::string& flag) {
  fs::path dir;
  if (!flag.empty()) {
    dir = flag;
  } else if (const char* env = std::getenv("SPLINEHMM_OUT_DIR");
             env != nullptr && *env != '\0') {
    dir = env;
  } else {
    dir = ".";
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir))
    throw InputError("cannot create output directory '" + dir.string() + "'");
  return dir;
}

// Artifact paths go to stdout, one per line; everything else to stderr.
void emit(const fs::path& p) { std::cout << p.string() << "\n"; }

void check_time_column(const Dataset& data) {
  const int c = data.find("time");
  if (c < 0) return;
  for (int t = 0; t < data.rows(); ++t) {
    const double v = data.values(t, c);
    if (std::isnan(v))
      throw InputError("time column has a missing value at row " +
                       std::to_string(t + 1));
    if (t > 0 && !(v > data.values(t - 1, c)))
      throw InputError("time column must be strictly increasing (row " +
                       std::to_string(t + 1) + ")");
  }
}

std::vector<double> parse_lambda_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      throw InputError("--lambda0: cannot parse '" + tok + "'");
    }
    while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos])))
      ++pos;
    if (pos != tok.size())
      throw InputError("--lambda0: cannot parse '" + tok + "'");
    if (!(v > 0.0) || !std::isfinite(v))
      throw InputError("--lambda0 values must be positive and finite");
    out.push_back(v);
  }
  if (out.empty()) throw InputError("--lambda0 needs at least one value");
  return out;
}

template <class F>
decltype(auto) stage(const char* name, F&& f) {
  try {
    return std::forward<F>(f)();
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(name) + " stage: " + e.what());
  }
}

nlohmann::ordered_json json_vec(const Eigen::VectorXd& v) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

struct FitArgs {
  std::string data, model, out, lambda0;
  double tol = 0.0;
  int max_outer = 0;
  int draws = 0;
  int grid = 200;
  std::uint64_t seed = 1;
  bool plots = false;
  bool tol_set = false;
  bool max_outer_set = false;
};

void write_fit_plots(const fs::path& dir, const CompiledModel& model,
                     const FitReport& report, const Dataset& curves,
                     const Dataset& states, int grid) {
  const int p = static_cast<int>(report.smooth_labels.size());
  for (int q = 0; q < p; ++q) {
    svg::Chart chart(report.smooth_labels[static_cast<std::size_t>(q)], "z",
                     "value");
    svg::Band band;
    svg::Series line;
    line.color = svg::palette_color(0);
    for (int g = 0; g < grid; ++g) {
      const Eigen::Index r = static_cast<Eigen::Index>(q) * grid + g;
      band.x.push_back(curves.values(r, 1));
      band.lo.push_back(curves.values(r, 4));
      band.hi.push_back(curves.values(r, 5));
      line.x.push_back(curves.values(r, 1));
      line.y.push_back(curves.values(r, 2));
    }
    chart.add_band(std::move(band));
    chart.add_line(std::move(line));
    const fs::path path =
        dir / ("plot_smooth_" + std::to_string(q + 1) + ".svg");
    write_file(path, chart.render());
    emit(path);
  }

  if (!report.trace.empty() && p > 0) {
    svg::Chart chart("smoothing parameter path", "outer iteration",
                     "log10 lambda");
    for (int q = 0; q < p; ++q) {
      svg::Series line;
      line.color = svg::palette_color(q);
      for (std::size_t t = 0; t < report.trace.size(); ++t) {
        line.x.push_back(static_cast<double>(t));
        line.y.push_back(std::log10(report.trace[t].lambda[q]));
      }
      chart.add_line(std::move(line));
    }
    const fs::path path = dir / "plot_trace.svg";
    write_file(path, chart.render());
    emit(path);
  }

  for (std::size_t s = 0; s < model.streams().size(); ++s) {
    const CompiledStream& cs = model.streams()[s];
    const std::string& name = model.spec().streams[s].column;
    svg::Chart chart("decoded states: " + name, "time", name);
    svg::Points pts;
    for (int t = 0; t < model.T(); ++t) {
      if (cs.missing[static_cast<std::size_t>(t)]) continue;
      pts.x.push_back(states.values(t, 0));
      pts.y.push_back(cs.x[t]);
      pts.cls.push_back(static_cast<int>(states.values(t, 1)) - 1);
    }
    chart.add_points(std::move(pts));
    const fs::path path = dir / ("plot_states_" + name + ".svg");
    write_file(path, chart.render());
    emit(path);
  }
}

int cmd_fit(const FitArgs& a) {
  const Dataset data = read_csv(a.data);
  check_time_column(data);
  ModelFile mf = parse_model_file(read_file(a.model));
  if (!a.lambda0.empty()) {
    const std::vector<double> vals = parse_lambda_list(a.lambda0);
    if (vals.size() != mf.spec.smooths.size())
      throw InputError("--lambda0 needs one value per smooth (got " +
                       std::to_string(vals.size()) + ", model has " +
                       std::to_string(mf.spec.smooths.size()) + ")");
    for (std::size_t q = 0; q < vals.size(); ++q)
      mf.spec.smooths[q].lambda0 = vals[q];
  }
  if (a.tol_set) mf.qreml.tol = a.tol;
  if (a.max_outer_set) mf.qreml.max_outer = a.max_outer;
  if (a.grid < 2) throw InputError("--grid needs at least 2 points");

  const CompiledModel model =
      stage("compile", [&] { return CompiledModel::compile(mf.spec, data); });
  const auto t0 = std::chrono::steady_clock::now();
  const QremlFit fit = stage("fit", [&] {
    return qreml_fit(model, model.init_theta(), model.lambda0(), mf.qreml);
  });
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  const FitReport report = build_fit_report(model, fit, mf.qreml, seconds);
  const Dataset states =
      stage("decode", [&] { return decode_table(model, fit.theta); });
  const Dataset curves =
      stage("curves", [&] { return curve_table(model, fit, a.grid); });

  const fs::path dir = resolve_out_dir(a.out);
  const fs::path report_path = dir / "fit.json";
  write_file(report_path, format_fit_report(report));
  emit(report_path);
  const fs::path states_path = dir / "states.csv";
  write_csv(states_path.string(), states);
  emit(states_path);
  const fs::path curves_path = dir / "curves.csv";
  write_csv(curves_path.string(), curves);
  emit(curves_path);

  if (a.draws > 0) {
    Rng rng(a.seed, 0, 0);
    const Eigen::MatrixXd draws = stage("draws", [&] {
      return sample_conditional(fit.theta, fit.J_p, a.draws, rng);
    });
    Dataset table;
    table.names = model.param_names();
    table.values = draws;
    const fs::path draws_path = dir / "draws.csv";
    write_csv(draws_path.string(), table);
    emit(draws_path);
  }
  if (a.plots) write_fit_plots(dir, model, report, curves, states, a.grid);

  if (!fit.converged) {
    std::cerr << "warning: smoothing-parameter iteration did not converge in "
              << mf.qreml.max_outer << " outer iterations\n";
    return kExitNoConverge;
  }
  return kExitOk;
}

int cmd_simulate(const std::string& scenario_path, const std::string& out,
                 int rep) {
  const SimScenario scenario = parse_scenario(read_file(scenario_path));
  const Dataset data = simulate(scenario, rep);
  const fs::path dir = resolve_out_dir(out);
  const fs::path path = dir / "dataset.csv";
  write_csv(path.string(), data);
  emit(path);
  return kExitOk;
}

int cmd_decode(const std::string& data_path, const std::string& fitted_path,
               const std::string& out) {
  const Dataset data = read_csv(data_path);
  check_time_column(data);
  const FittedModel fm = parse_fitted_model(read_file(fitted_path));
  const CompiledModel model = stage("compile", [&] {
    return CompiledModel::compile(fm.spec, data, &fm.transforms);
  });
  if (fm.theta.size() != model.dim())
    throw InputError("fitted parameter vector has " +
                     std::to_string(fm.theta.size()) + " entries, model needs " +
                     std::to_string(model.dim()));
  const Dataset states =
      stage("decode", [&] { return decode_table(model, fm.theta); });
  const fs::path dir = resolve_out_dir(out);
  const fs::path path = dir / "states.csv";
  write_csv(path.string(), states);
  emit(path);
  return kExitOk;
}

int cmd_study(const std::string& study_path, const std::string& out, int jobs,
              int reps) {
  StudyConfig cfg = parse_study(read_file(study_path));
  if (reps > 0) cfg.n_reps = reps;
  cfg.jobs = jobs;
  const StudyReport report = run_study(cfg);

  const fs::path dir = resolve_out_dir(out);
  const fs::path rows_path = dir / "study_rows.csv";
  write_csv(rows_path.string(), report.rows_table);
  emit(rows_path);
  const fs::path trace_path = dir / "study_trace.csv";
  write_csv(trace_path.string(), report.trace_table);
  emit(trace_path);
  const fs::path curves_path = dir / "study_curves.csv";
  write_csv(curves_path.string(), report.curve_table);
  emit(curves_path);

  nlohmann::ordered_json j;
  j["schema"] = kStudyReportSchema;
  j["seed"] = cfg.scenario.seed;
  j["T_values"] = cfg.T_values;
  j["reps"] = cfg.n_reps;
  nlohmann::ordered_json fj;
  fj["n_basis"] = cfg.n_basis;
  fj["lambda0"] = cfg.lambda0;
  fj["tol"] = cfg.qreml.tol;
  fj["max_outer"] = cfg.qreml.max_outer;
  j["fit"] = std::move(fj);
  j["grid_points"] = cfg.grid_points;
  j["smooths"] = report.smooth_labels;
  nlohmann::ordered_json aggs = nlohmann::ordered_json::array();
  for (const StudyAggregate& a : report.aggregates) {
    nlohmann::ordered_json aj;
    aj["T"] = a.T;
    aj["n_total"] = a.n_total;
    aj["n_failed"] = a.n_failed;
    aj["n_converged"] = a.n_converged;
    aj["convergence_rate"] = a.convergence_rate;
    aj["median_outer"] = a.median_outer;
    aj["median_rmse"] = json_vec(a.median_rmse);
    aj["q25_rmse"] = json_vec(a.q25_rmse);
    aj["q75_rmse"] = json_vec(a.q75_rmse);
    aggs.push_back(std::move(aj));
  }
  j["aggregates"] = std::move(aggs);
  const fs::path summary_path = dir / "study_summary.json";
  write_file(summary_path, j.dump(2) + "\n");
  emit(summary_path);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markov-switching models with penalized-spline components"};
  app.set_version_flag("--version", "splinehmm 0.1.0");
  app.require_subcommand(1);

  FitArgs fa;
  CLI::App* fit = app.add_subcommand("fit", "Fit a model to a CSV series");
  fit->add_option("data", fa.data, "Input CSV file")->required();
  fit->add_option("model", fa.model, "Model JSON file")->required();
  fit->add_option("--out", fa.out,
                  "Output directory (default: $SPLINEHMM_OUT_DIR or .)");
  fit->add_option("--lambda0", fa.lambda0,
                  "Comma-separated initial smoothing parameters, one per "
                  "smooth");
  CLI::Option* tol_opt =
      fit->add_option("--tol", fa.tol, "Outer convergence tolerance");
  CLI::Option* maxo_opt = fit->add_option("--max-outer", fa.max_outer,
                                          "Maximum outer iterations");
  fit->add_option("--draws", fa.draws,
                  "Rows of conditional Gaussian parameter draws to write");
  fit->add_option("--seed", fa.seed, "Seed for --draws");
  fit->add_option("--grid", fa.grid, "Grid points per smooth curve");
  fit->add_flag("--plots", fa.plots, "Write SVG plots");

  std::string sim_scenario, sim_out;
  int sim_rep = 1;
  CLI::App* sim = app.add_subcommand("simulate", "Draw one replicate of a "
                                                 "scenario");
  sim->add_option("scenario", sim_scenario, "Scenario JSON file")->required();
  sim->add_option("--out", sim_out,
                  "Output directory (default: $SPLINEHMM_OUT_DIR or .)");
  sim->add_option("--rep", sim_rep, "Replicate index (1-based)");

  std::string dec_data, dec_fitted, dec_out;
  CLI::App* dec = app.add_subcommand("decode", "Decode states with a fitted "
                                               "model");
  dec->add_option("data", dec_data, "Input CSV file")->required();
  dec->add_option("fitted", dec_fitted, "fit.json from a previous fit")
      ->required();
  dec->add_option("--out", dec_out,
                  "Output directory (default: $SPLINEHMM_OUT_DIR or .)");

  std::string study_file, study_out;
  int study_jobs = 1, study_reps = 0;
  CLI::App* study = app.add_subcommand("study", "Run a replication study");
  study->add_option("study", study_file, "Study JSON file")->required();
  study->add_option("--out", study_out,
                    "Output directory (default: $SPLINEHMM_OUT_DIR or .)");
  study->add_option("--jobs", study_jobs, "Worker threads for replicates");
  study->add_option("--reps", study_reps,
                    "Override the replicate count in the study file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (fit->parsed()) {
      fa.tol_set = tol_opt->count() > 0;
      fa.max_outer_set = maxo_opt->count() > 0;
      return cmd_fit(fa);
    }
    if (sim->parsed()) return cmd_simulate(sim_scenario, sim_out, sim_rep);
    if (dec->parsed()) return cmd_decode(dec_data, dec_fitted, dec_out);
    if (study->parsed())
      return cmd_study(study_file, study_out, study_jobs, study_reps);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ModelError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
