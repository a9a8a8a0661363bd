// Internal JSON helpers shared by the document and report code; not installed.
#pragma once

#include <json.hpp>

#include <Eigen/Dense>
#include <initializer_list>
#include <string>

#include "splinehmm/model.hpp"
#include "splinehmm/model_json.hpp"
#include "splinehmm/sim.hpp"

namespace splinehmm {
namespace jsonutil {

// ordered_json keeps insertion order, so parse -> dump is stable.
using Json = nlohmann::ordered_json;

// Parse with line/column diagnostics in the InputError message.
Json parse_text(const std::string& text, const std::string& what);

[[noreturn]] void fail(const std::string& path, const std::string& message);

// Rejects keys outside `allowed` (typo safety; documents are versioned).
void check_keys(const Json& obj, const std::string& path,
                std::initializer_list<const char*> allowed);

const Json& require_key(const Json& obj, const std::string& path,
                        const char* key);
void require_schema(const Json& obj, const std::string& path,
                    const char* schema);

bool get_bool(const Json& v, const std::string& path);
double get_num(const Json& v, const std::string& path);
int get_int(const Json& v, const std::string& path);
std::string get_str(const Json& v, const std::string& path);

double opt_num(const Json& obj, const std::string& path, const char* key,
               double fallback);
int opt_int(const Json& obj, const std::string& path, const char* key,
            int fallback);
bool opt_bool(const Json& obj, const std::string& path, const char* key,
              bool fallback);

Json vec_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vec_from_json(const Json& v, const std::string& path);

// Object-level converters shared by the document and report writers.
Json model_file_to_json(const ModelFile& file);
ModelFile model_file_from_json(const Json& j, const std::string& path);
Json scenario_to_json(const SimScenario& s);
SimScenario scenario_from_json(const Json& j, const std::string& path,
                               bool require_T);
Json transforms_to_json(const SmoothTransforms& tr);
SmoothTransforms transforms_from_json(const Json& j, const std::string& path);

}  // namespace jsonutil
}  // namespace splinehmm
