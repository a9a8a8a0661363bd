#pragma once

#include <Eigen/Dense>
#include <string>

#include "splinehmm/model.hpp"
#include "splinehmm/qreml.hpp"
#include "splinehmm/sim.hpp"

namespace splinehmm {

// Document schema tags; bumped on breaking layout changes.
inline constexpr const char* kModelSchema = "splinehmm-model/1";
inline constexpr const char* kScenarioSchema = "splinehmm-scenario/1";
inline constexpr const char* kStudySchema = "splinehmm-study/1";
inline constexpr const char* kReportSchema = "splinehmm-report/1";
inline constexpr const char* kStudyReportSchema = "splinehmm-study-report/1";

// A model document: the specification plus optional fitting overrides.
struct ModelFile {
  ModelSpec spec;
  QremlOptions qreml;
};

// Parsers throw InputError with a field path (and, for malformed JSON, the
// line and column).  Unknown keys are rejected.
ModelFile parse_model_file(const std::string& text);
std::string format_model_file(const ModelFile& file, int indent = 2);

SimScenario parse_scenario(const std::string& text);
std::string format_scenario(const SimScenario& scenario, int indent = 2);

// The study document embeds its scenario inline; `jobs` is a runtime choice
// and stays at the struct default.
StudyConfig parse_study(const std::string& text);
std::string format_study(const StudyConfig& config, int indent = 2);

// The slice of a fit report needed to re-apply a fitted model to data.
struct FittedModel {
  ModelSpec spec;
  SmoothTransforms transforms;
  Eigen::VectorXd theta;
  Eigen::VectorXd lambda;
};

FittedModel parse_fitted_model(const std::string& report_text);

}  // namespace splinehmm
