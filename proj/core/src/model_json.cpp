#include "splinehmm/model_json.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "json_util.hpp"
#include "splinehmm/errors.hpp"

namespace splinehmm {
namespace jsonutil {

Json parse_text(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t byte = e.byte > 0 ? static_cast<std::size_t>(e.byte) - 1 : 0;
    if (byte > text.size()) byte = text.size();
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw InputError(what + ": malformed JSON at line " + std::to_string(line) +
                     ", column " + std::to_string(col) + ": " + e.what());
  }
}

void fail(const std::string& path, const std::string& message) {
  throw InputError(path + ": " + message);
}

void check_keys(const Json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known) fail(path, "unknown key '" + item.key() + "'");
  }
}

const Json& require_key(const Json& obj, const std::string& path,
                        const char* key) {
  if (!obj.is_object()) fail(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end())
    fail(path, "missing required field '" + std::string(key) + "'");
  return *it;
}

void require_schema(const Json& obj, const std::string& path,
                    const char* schema) {
  const Json& v = require_key(obj, path, "schema");
  if (!v.is_string() || v.get<std::string>() != schema)
    fail(path + ".schema", "expected \"" + std::string(schema) + "\"");
}

bool get_bool(const Json& v, const std::string& path) {
  if (!v.is_boolean()) fail(path, "expected true or false");
  return v.get<bool>();
}

double get_num(const Json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

int get_int(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  const long long x = v.get<long long>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    fail(path, "integer out of range");
  return static_cast<int>(x);
}

std::string get_str(const Json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

double opt_num(const Json& obj, const std::string& path, const char* key,
               double fallback) {
  const auto it = obj.find(key);
  return it == obj.end() ? fallback : get_num(*it, path + "." + key);
}

int opt_int(const Json& obj, const std::string& path, const char* key,
            int fallback) {
  const auto it = obj.find(key);
  return it == obj.end() ? fallback : get_int(*it, path + "." + key);
}

bool opt_bool(const Json& obj, const std::string& path, const char* key,
              bool fallback) {
  const auto it = obj.find(key);
  return it == obj.end() ? fallback : get_bool(*it, path + "." + key);
}

Json vec_to_json(const Eigen::VectorXd& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vec_from_json(const Json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Json& e = v[i];
    if (e.is_null())  // JSON has no NaN literal; null stands in for it
      out[static_cast<Eigen::Index>(i)] =
          std::numeric_limits<double>::quiet_NaN();
    else
      out[static_cast<Eigen::Index>(i)] =
          get_num(e, path + "[" + std::to_string(i + 1) + "]");
  }
  return out;
}

namespace {

std::uint64_t get_u64(const Json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    const long long x = v.get<long long>();
    if (x < 0) fail(path, "expected a non-negative integer");
    return static_cast<std::uint64_t>(x);
  }
  fail(path, "expected a non-negative integer");
}

Family family_from(const std::string& s, const std::string& path) {
  for (Family f : {Family::gaussian, Family::gamma, Family::vonmises,
                   Family::spline})
    if (s == family_name(f)) return f;
  fail(path, "unknown family '" + s +
                 "' (expected gaussian, gamma, vonmises, or spline)");
}

const char* link_tag(Link l) {
  switch (l) {
    case Link::identity:
      return "identity";
    case Link::log:
      return "log";
    case Link::logit:
      return "logit";
  }
  return "identity";
}

Link link_from(const std::string& s, const std::string& path) {
  if (s == "identity") return Link::identity;
  if (s == "log") return Link::log;
  if (s == "logit") return Link::logit;
  fail(path, "unknown link '" + s + "' (expected identity, log, or logit)");
}

const char* target_tag(SmoothTargetKind k) {
  switch (k) {
    case SmoothTargetKind::density:
      return "density";
    case SmoothTargetKind::predictor:
      return "predictor";
    case SmoothTargetKind::tpm:
      return "tpm";
  }
  return "predictor";
}

const char* ident_tag(Identifiability i) {
  switch (i) {
    case Identifiability::none:
      return "none";
    case Identifiability::drop_first:
      return "drop_first";
    case Identifiability::center:
      return "center";
  }
  return "drop_first";
}

Identifiability ident_from(const std::string& s, const std::string& path) {
  if (s == "none") return Identifiability::none;
  if (s == "drop_first") return Identifiability::drop_first;
  if (s == "center") return Identifiability::center;
  fail(path, "unknown identifiability '" + s +
                 "' (expected none, drop_first, or center)");
}

const char* penalty_tag(PenaltyKind k) {
  return k == PenaltyKind::difference ? "difference" : "derivative";
}

PenaltyKind penalty_from(const std::string& s, const std::string& path) {
  if (s == "difference") return PenaltyKind::difference;
  if (s == "derivative") return PenaltyKind::derivative;
  fail(path, "unknown penalty '" + s + "' (expected difference or derivative)");
}

const char* delta_tag(DeltaPolicy d) {
  switch (d) {
    case DeltaPolicy::stationary:
      return "stationary";
    case DeltaPolicy::uniform:
      return "uniform";
    case DeltaPolicy::estimated:
      return "estimated";
  }
  return "stationary";
}

DeltaPolicy delta_from(const std::string& s, const std::string& path) {
  if (s == "stationary") return DeltaPolicy::stationary;
  if (s == "uniform") return DeltaPolicy::uniform;
  if (s == "estimated") return DeltaPolicy::estimated;
  fail(path, "unknown initial-distribution policy '" + s +
                 "' (expected stationary, uniform, or estimated)");
}

int stream_index(const ModelSpec& ms, const std::string& name,
                 const std::string& path) {
  for (std::size_t s = 0; s < ms.streams.size(); ++s)
    if (ms.streams[s].column == name) return static_cast<int>(s);
  fail(path, "unknown stream '" + name + "'");
}

int param_index(Family f, const std::string& name, const std::string& path) {
  const int np = family_n_params(f);
  std::string known;
  for (int p = 0; p < np; ++p) {
    if (name == family_param_name(f, p)) return p;
    if (p) known += ", ";
    known += family_param_name(f, p);
  }
  fail(path, "unknown parameter '" + name + "' (expected " + known + ")");
}

int get_state_index(const Json& v, int n_states, const std::string& path) {
  const int s = get_int(v, path);
  if (s < 1 || s > n_states)
    fail(path, "state index must lie in [1, " + std::to_string(n_states) +
                   "]");
  return s - 1;
}

const char* term_tag(FunctionTerm::Kind k) {
  switch (k) {
    case FunctionTerm::Kind::constant:
      return "constant";
    case FunctionTerm::Kind::linear:
      return "linear";
    case FunctionTerm::Kind::sine:
      return "sine";
    case FunctionTerm::Kind::cosine:
      return "cosine";
    case FunctionTerm::Kind::exponential:
      return "exponential";
  }
  return "constant";
}

FunctionTerm::Kind term_from(const std::string& s, const std::string& path) {
  if (s == "constant") return FunctionTerm::Kind::constant;
  if (s == "linear") return FunctionTerm::Kind::linear;
  if (s == "sine") return FunctionTerm::Kind::sine;
  if (s == "cosine") return FunctionTerm::Kind::cosine;
  if (s == "exponential") return FunctionTerm::Kind::exponential;
  fail(path, "unknown term type '" + s +
                 "' (expected constant, linear, sine, cosine, or exponential)");
}

bool term_uses_b(FunctionTerm::Kind k) {
  return k == FunctionTerm::Kind::sine || k == FunctionTerm::Kind::cosine ||
         k == FunctionTerm::Kind::exponential;
}

SmoothSpec smooth_from_json(const Json& sj, const ModelSpec& ms,
                            const std::string& path) {
  check_keys(sj, path,
             {"target", "from", "to", "stream", "state", "parameter",
              "covariate", "k", "degree", "cyclic", "domain", "penalty",
              "penalty_order", "identifiability", "lambda0"});
  SmoothSpec sp;
  const std::string target =
      get_str(require_key(sj, path, "target"), path + ".target");
  const auto forbid = [&](const char* key) {
    if (sj.contains(key))
      fail(path, "key '" + std::string(key) + "' does not apply to target '" +
                     target + "'");
  };
  if (target == "tpm") {
    sp.kind = SmoothTargetKind::tpm;
    forbid("stream");
    forbid("state");
    forbid("parameter");
    sp.from = get_state_index(require_key(sj, path, "from"), ms.n_states,
                              path + ".from");
    sp.to = get_state_index(require_key(sj, path, "to"), ms.n_states,
                            path + ".to");
    if (sp.from == sp.to)
      fail(path, "transition smooths apply to off-diagonal entries only");
  } else if (target == "density" || target == "predictor") {
    forbid("from");
    forbid("to");
    sp.stream = stream_index(
        ms, get_str(require_key(sj, path, "stream"), path + ".stream"),
        path + ".stream");
    sp.state = get_state_index(require_key(sj, path, "state"), ms.n_states,
                               path + ".state");
    if (target == "density") {
      sp.kind = SmoothTargetKind::density;
      forbid("parameter");
      forbid("covariate");
    } else {
      sp.kind = SmoothTargetKind::predictor;
      sp.param = param_index(
          ms.streams[static_cast<std::size_t>(sp.stream)].family,
          get_str(require_key(sj, path, "parameter"), path + ".parameter"),
          path + ".parameter");
    }
  } else {
    fail(path + ".target", "unknown target '" + target +
                               "' (expected tpm, density, or predictor)");
  }
  if (sp.kind != SmoothTargetKind::density)
    sp.covariate =
        get_str(require_key(sj, path, "covariate"), path + ".covariate");

  sp.basis.K = opt_int(sj, path, "k", 10);
  if (sp.basis.K < 1) fail(path + ".k", "must be at least 1");
  sp.basis.degree = opt_int(sj, path, "degree", 3);
  sp.basis.cyclic = opt_bool(sj, path, "cyclic", false);
  sp.basis.penalty_order = opt_int(sj, path, "penalty_order", 2);
  if (sj.contains("penalty"))
    sp.penalty = penalty_from(get_str(sj["penalty"], path + ".penalty"),
                              path + ".penalty");
  if (sj.contains("identifiability"))
    sp.ident = ident_from(
        get_str(sj["identifiability"], path + ".identifiability"),
        path + ".identifiability");
  if (sp.kind == SmoothTargetKind::density &&
      sp.ident != Identifiability::drop_first)
    fail(path + ".identifiability",
         "density smooths always pin the first coefficient");
  if (sj.contains("domain")) {
    const Json& d = sj["domain"];
    if (d.is_string() && d.get<std::string>() == "auto") {
      sp.domain_auto = true;
    } else if (d.is_array() && d.size() == 2) {
      sp.basis.lo = get_num(d[0], path + ".domain[1]");
      sp.basis.hi = get_num(d[1], path + ".domain[2]");
      if (!(sp.basis.lo < sp.basis.hi))
        fail(path + ".domain", "needs lo < hi");
      sp.domain_auto = false;
    } else {
      fail(path + ".domain", "expected \"auto\" or [lo, hi]");
    }
  } else {
    sp.domain_auto = true;
  }
  if (sj.contains("lambda0")) {
    const double l0 = get_num(sj["lambda0"], path + ".lambda0");
    if (!(l0 > 0.0) || !std::isfinite(l0))
      fail(path + ".lambda0", "must be positive and finite");
    sp.lambda0 = l0;
  }
  return sp;
}

Json smooth_to_json(const SmoothSpec& sp, const ModelSpec& ms) {
  Json sj = Json::object();
  sj["target"] = target_tag(sp.kind);
  if (sp.kind == SmoothTargetKind::tpm) {
    sj["from"] = sp.from + 1;
    sj["to"] = sp.to + 1;
  } else {
    sj["stream"] = ms.streams[static_cast<std::size_t>(sp.stream)].column;
    sj["state"] = sp.state + 1;
    if (sp.kind == SmoothTargetKind::predictor)
      sj["parameter"] = family_param_name(
          ms.streams[static_cast<std::size_t>(sp.stream)].family, sp.param);
  }
  if (sp.kind != SmoothTargetKind::density) sj["covariate"] = sp.covariate;
  sj["k"] = sp.basis.K;
  sj["degree"] = sp.basis.degree;
  sj["cyclic"] = sp.basis.cyclic;
  if (sp.domain_auto)
    sj["domain"] = "auto";
  else
    sj["domain"] = Json::array({sp.basis.lo, sp.basis.hi});
  sj["penalty"] = penalty_tag(sp.penalty);
  sj["penalty_order"] = sp.basis.penalty_order;
  sj["identifiability"] = ident_tag(sp.ident);
  if (sp.lambda0) sj["lambda0"] = *sp.lambda0;
  return sj;
}

}  // namespace

ModelFile model_file_from_json(const Json& j, const std::string& path) {
  check_keys(j, path,
             {"schema", "states", "streams", "smooths", "delta", "init",
              "qreml"});
  require_schema(j, path, kModelSchema);
  ModelFile out;
  ModelSpec& ms = out.spec;
  ms.n_states = get_int(require_key(j, path, "states"), path + ".states");
  if (ms.n_states < 1) fail(path + ".states", "must be at least 1");

  const Json& streams = require_key(j, path, "streams");
  if (!streams.is_array() || streams.empty())
    fail(path + ".streams", "expected a non-empty array");
  for (std::size_t s = 0; s < streams.size(); ++s) {
    const std::string spath = path + ".streams[" + std::to_string(s + 1) + "]";
    const Json& sj = streams[s];
    check_keys(sj, spath, {"name", "family", "links"});
    StreamSpec ss;
    ss.column = get_str(require_key(sj, spath, "name"), spath + ".name");
    if (ss.column.empty()) fail(spath + ".name", "must not be empty");
    for (const StreamSpec& prev : ms.streams)
      if (prev.column == ss.column)
        fail(spath + ".name", "duplicate stream '" + ss.column + "'");
    ss.family = family_from(
        get_str(require_key(sj, spath, "family"), spath + ".family"),
        spath + ".family");
    if (sj.contains("links")) {
      const Json& lj = sj["links"];
      const int np = family_n_params(ss.family);
      if (np == 0)
        fail(spath + ".links", "spline-family streams take no links");
      if (!lj.is_array() || static_cast<int>(lj.size()) != np)
        fail(spath + ".links",
             "expected " + std::to_string(np) + " link names");
      for (int p = 0; p < np; ++p)
        ss.links.push_back(
            link_from(get_str(lj[static_cast<std::size_t>(p)],
                              spath + ".links"),
                      spath + ".links"));
    }
    ms.streams.push_back(std::move(ss));
  }

  if (j.contains("smooths")) {
    const Json& smooths = j["smooths"];
    if (!smooths.is_array()) fail(path + ".smooths", "expected an array");
    for (std::size_t q = 0; q < smooths.size(); ++q)
      ms.smooths.push_back(smooth_from_json(
          smooths[q], ms, path + ".smooths[" + std::to_string(q + 1) + "]"));
  }

  if (j.contains("delta"))
    ms.delta = delta_from(get_str(j["delta"], path + ".delta"),
                          path + ".delta");

  if (j.contains("init")) {
    const std::string ipath = path + ".init";
    const Json& ij = j["init"];
    check_keys(ij, ipath, {"tpm_self_prob", "streams"});
    if (ij.contains("tpm_self_prob"))
      ms.init.tpm_self_prob = get_num(ij["tpm_self_prob"],
                                      ipath + ".tpm_self_prob");
    if (ij.contains("streams")) {
      const Json& arr = ij["streams"];
      if (!arr.is_array()) fail(ipath + ".streams", "expected an array");
      ms.init.stream_params.resize(ms.streams.size());
      for (std::size_t s = 0; s < ms.streams.size(); ++s) {
        const int np = family_n_params(ms.streams[s].family);
        ms.init.stream_params[s].assign(
            static_cast<std::size_t>(np),
            std::vector<double>(static_cast<std::size_t>(ms.n_states),
                                std::numeric_limits<double>::quiet_NaN()));
      }
      for (std::size_t e = 0; e < arr.size(); ++e) {
        const std::string epath =
            ipath + ".streams[" + std::to_string(e + 1) + "]";
        const Json& ej = arr[e];
        check_keys(ej, epath, {"stream", "params"});
        const int s = stream_index(
            ms, get_str(require_key(ej, epath, "stream"), epath + ".stream"),
            epath + ".stream");
        const Family fam = ms.streams[static_cast<std::size_t>(s)].family;
        const Json& pj = require_key(ej, epath, "params");
        if (!pj.is_object()) fail(epath + ".params", "expected an object");
        for (const auto& item : pj.items()) {
          const std::string ppath = epath + ".params." + item.key();
          const int p = param_index(fam, item.key(), ppath);
          const Json& vals = item.value();
          if (!vals.is_array() ||
              static_cast<int>(vals.size()) != ms.n_states)
            fail(ppath, "expected " + std::to_string(ms.n_states) +
                            " values (one per state)");
          for (int i = 0; i < ms.n_states; ++i) {
            const Json& v = vals[static_cast<std::size_t>(i)];
            if (v.is_null()) continue;  // keep the default for this state
            ms.init.stream_params[static_cast<std::size_t>(s)]
                                 [static_cast<std::size_t>(p)]
                                 [static_cast<std::size_t>(i)] =
                get_num(v, ppath);
          }
        }
      }
    }
  }

  if (j.contains("qreml")) {
    const std::string qpath = path + ".qreml";
    const Json& qj = j["qreml"];
    check_keys(qj, qpath,
               {"tol", "max_outer", "lambda_lo", "lambda_hi", "inner_max_iter",
                "inner_grad_tol", "lbfgs"});
    QremlOptions& qo = out.qreml;
    qo.tol = opt_num(qj, qpath, "tol", qo.tol);
    qo.max_outer = opt_int(qj, qpath, "max_outer", qo.max_outer);
    qo.lambda_lo = opt_num(qj, qpath, "lambda_lo", qo.lambda_lo);
    qo.lambda_hi = opt_num(qj, qpath, "lambda_hi", qo.lambda_hi);
    qo.inner.max_iter = opt_int(qj, qpath, "inner_max_iter",
                                qo.inner.max_iter);
    qo.inner.grad_tol = opt_num(qj, qpath, "inner_grad_tol",
                                qo.inner.grad_tol);
    qo.inner.use_lbfgs = opt_bool(qj, qpath, "lbfgs", qo.inner.use_lbfgs);
  }
  return out;
}

Json model_file_to_json(const ModelFile& file) {
  const ModelSpec& ms = file.spec;
  Json j = Json::object();
  j["schema"] = kModelSchema;
  j["states"] = ms.n_states;
  Json streams = Json::array();
  for (const StreamSpec& ss : ms.streams) {
    Json sj = Json::object();
    sj["name"] = ss.column;
    sj["family"] = family_name(ss.family);
    if (!ss.links.empty()) {
      Json lj = Json::array();
      for (Link l : ss.links) lj.push_back(link_tag(l));
      sj["links"] = std::move(lj);
    }
    streams.push_back(std::move(sj));
  }
  j["streams"] = std::move(streams);
  Json smooths = Json::array();
  for (const SmoothSpec& sp : ms.smooths)
    smooths.push_back(smooth_to_json(sp, ms));
  j["smooths"] = std::move(smooths);
  j["delta"] = delta_tag(ms.delta);

  const bool any_init =
      ms.init.tpm_self_prob.has_value() || !ms.init.stream_params.empty();
  if (any_init) {
    Json ij = Json::object();
    if (ms.init.tpm_self_prob) ij["tpm_self_prob"] = *ms.init.tpm_self_prob;
    if (!ms.init.stream_params.empty()) {
      Json arr = Json::array();
      for (std::size_t s = 0; s < ms.init.stream_params.size(); ++s) {
        const Family fam = ms.streams[s].family;
        Json ej = Json::object();
        ej["stream"] = ms.streams[s].column;
        Json pj = Json::object();
        for (std::size_t p = 0; p < ms.init.stream_params[s].size(); ++p) {
          Json vals = Json::array();
          for (double v : ms.init.stream_params[s][p]) {
            if (std::isnan(v))
              vals.push_back(nullptr);
            else
              vals.push_back(v);
          }
          pj[family_param_name(fam, static_cast<int>(p))] = std::move(vals);
        }
        ej["params"] = std::move(pj);
        arr.push_back(std::move(ej));
      }
      ij["streams"] = std::move(arr);
    }
    j["init"] = std::move(ij);
  }

  Json qj = Json::object();
  qj["tol"] = file.qreml.tol;
  qj["max_outer"] = file.qreml.max_outer;
  qj["lambda_lo"] = file.qreml.lambda_lo;
  qj["lambda_hi"] = file.qreml.lambda_hi;
  qj["inner_max_iter"] = file.qreml.inner.max_iter;
  qj["inner_grad_tol"] = file.qreml.inner.grad_tol;
  qj["lbfgs"] = file.qreml.inner.use_lbfgs;
  j["qreml"] = std::move(qj);
  return j;
}

SimScenario scenario_from_json(const Json& j, const std::string& path,
                               bool require_T) {
  check_keys(j, path,
             {"schema", "states", "T", "reps", "seed", "covariate", "streams",
              "tpm", "delta"});
  if (require_T || j.contains("schema"))
    require_schema(j, path, kScenarioSchema);
  SimScenario sc;
  sc.n_states = get_int(require_key(j, path, "states"), path + ".states");
  if (require_T)
    sc.T = get_int(require_key(j, path, "T"), path + ".T");
  else
    sc.T = opt_int(j, path, "T", sc.T);
  sc.n_reps = opt_int(j, path, "reps", 1);
  if (j.contains("seed")) sc.seed = get_u64(j["seed"], path + ".seed");

  if (j.contains("covariate")) {
    const std::string cpath = path + ".covariate";
    const Json& cj = j["covariate"];
    check_keys(cj, cpath, {"name", "law", "values"});
    if (cj.contains("name"))
      sc.covariate = get_str(cj["name"], cpath + ".name");
    std::string law = "uniform01";
    if (cj.contains("law")) law = get_str(cj["law"], cpath + ".law");
    if (law == "uniform01") {
      sc.law = CovariateLaw::uniform01;
      if (cj.contains("values"))
        fail(cpath + ".values", "only the supplied law takes values");
    } else if (law == "supplied") {
      sc.law = CovariateLaw::supplied;
      sc.supplied_z =
          vec_from_json(require_key(cj, cpath, "values"), cpath + ".values");
    } else {
      fail(cpath + ".law",
           "unknown law '" + law + "' (expected uniform01 or supplied)");
    }
  }

  const Json& streams = require_key(j, path, "streams");
  if (!streams.is_array() || streams.empty())
    fail(path + ".streams", "expected a non-empty array");
  for (std::size_t s = 0; s < streams.size(); ++s) {
    const std::string spath = path + ".streams[" + std::to_string(s + 1) + "]";
    const Json& sj = streams[s];
    check_keys(sj, spath, {"name", "family", "params"});
    SimStream st;
    st.name = get_str(require_key(sj, spath, "name"), spath + ".name");
    st.family = family_from(
        get_str(require_key(sj, spath, "family"), spath + ".family"),
        spath + ".family");
    if (st.family == Family::spline)
      fail(spath + ".family", "generator streams must be parametric");
    const int np = family_n_params(st.family);
    st.params.assign(static_cast<std::size_t>(np), {});
    const Json& pj = require_key(sj, spath, "params");
    if (!pj.is_object()) fail(spath + ".params", "expected an object");
    std::vector<char> seen(static_cast<std::size_t>(np), 0);
    for (const auto& item : pj.items()) {
      const std::string ppath = spath + ".params." + item.key();
      const int p = param_index(st.family, item.key(), ppath);
      const Json& vals = item.value();
      if (!vals.is_array() || static_cast<int>(vals.size()) != sc.n_states)
        fail(ppath, "expected " + std::to_string(sc.n_states) +
                        " values (one per state)");
      st.params[static_cast<std::size_t>(p)].clear();
      for (const Json& v : vals)
        st.params[static_cast<std::size_t>(p)].push_back(get_num(v, ppath));
      seen[static_cast<std::size_t>(p)] = 1;
    }
    for (int p = 0; p < np; ++p)
      if (!seen[static_cast<std::size_t>(p)])
        fail(spath + ".params", "missing parameter '" +
                                    std::string(family_param_name(st.family,
                                                                  p)) +
                                    "'");
    sc.streams.push_back(std::move(st));
  }

  const Json& tpm = require_key(j, path, "tpm");
  if (!tpm.is_array()) fail(path + ".tpm", "expected an array");
  for (std::size_t e = 0; e < tpm.size(); ++e) {
    const std::string epath = path + ".tpm[" + std::to_string(e + 1) + "]";
    const Json& ej = tpm[e];
    check_keys(ej, epath, {"from", "to", "terms"});
    SimTpmEntry entry;
    entry.from = get_state_index(require_key(ej, epath, "from"), sc.n_states,
                                 epath + ".from");
    entry.to = get_state_index(require_key(ej, epath, "to"), sc.n_states,
                               epath + ".to");
    const Json& terms = require_key(ej, epath, "terms");
    if (!terms.is_array() || terms.empty())
      fail(epath + ".terms", "expected a non-empty array");
    for (std::size_t t = 0; t < terms.size(); ++t) {
      const std::string tpath =
          epath + ".terms[" + std::to_string(t + 1) + "]";
      const Json& tj = terms[t];
      check_keys(tj, tpath, {"type", "a", "b"});
      FunctionTerm term;
      term.kind = term_from(get_str(require_key(tj, tpath, "type"),
                                    tpath + ".type"),
                            tpath + ".type");
      term.a = get_num(require_key(tj, tpath, "a"), tpath + ".a");
      if (term_uses_b(term.kind)) {
        term.b = get_num(require_key(tj, tpath, "b"), tpath + ".b");
      } else if (tj.contains("b")) {
        fail(tpath + ".b", "term type '" + std::string(term_tag(term.kind)) +
                               "' takes no 'b'");
      }
      entry.terms.push_back(term);
    }
    sc.tpm.push_back(std::move(entry));
  }

  if (j.contains("delta"))
    sc.delta = vec_from_json(j["delta"], path + ".delta");
  return sc;
}

Json scenario_to_json(const SimScenario& s) {
  Json j = Json::object();
  j["schema"] = kScenarioSchema;
  j["states"] = s.n_states;
  j["T"] = s.T;
  j["reps"] = s.n_reps;
  j["seed"] = s.seed;
  Json cj = Json::object();
  cj["name"] = s.covariate;
  cj["law"] = s.law == CovariateLaw::uniform01 ? "uniform01" : "supplied";
  if (s.law == CovariateLaw::supplied) cj["values"] = vec_to_json(s.supplied_z);
  j["covariate"] = std::move(cj);
  Json streams = Json::array();
  for (const SimStream& st : s.streams) {
    Json sj = Json::object();
    sj["name"] = st.name;
    sj["family"] = family_name(st.family);
    Json pj = Json::object();
    for (std::size_t p = 0; p < st.params.size(); ++p)
      pj[family_param_name(st.family, static_cast<int>(p))] = st.params[p];
    sj["params"] = std::move(pj);
    streams.push_back(std::move(sj));
  }
  j["streams"] = std::move(streams);
  Json tpm = Json::array();
  for (const SimTpmEntry& e : s.tpm) {
    Json ej = Json::object();
    ej["from"] = e.from + 1;
    ej["to"] = e.to + 1;
    Json terms = Json::array();
    for (const FunctionTerm& t : e.terms) {
      Json tj = Json::object();
      tj["type"] = term_tag(t.kind);
      tj["a"] = t.a;
      if (term_uses_b(t.kind)) tj["b"] = t.b;
      terms.push_back(std::move(tj));
    }
    ej["terms"] = std::move(terms);
    tpm.push_back(std::move(ej));
  }
  j["tpm"] = std::move(tpm);
  if (s.delta) j["delta"] = vec_to_json(*s.delta);
  return j;
}

Json transforms_to_json(const SmoothTransforms& tr) {
  Json j = Json::object();
  Json domains = Json::array();
  for (const auto& d : tr.domains)
    domains.push_back(Json::array({d[0], d[1]}));
  j["domains"] = std::move(domains);
  Json means = Json::array();
  for (const Eigen::VectorXd& m : tr.center_means)
    means.push_back(vec_to_json(m));
  j["center_means"] = std::move(means);
  return j;
}

SmoothTransforms transforms_from_json(const Json& j, const std::string& path) {
  check_keys(j, path, {"domains", "center_means"});
  SmoothTransforms tr;
  const Json& domains = require_key(j, path, "domains");
  if (!domains.is_array()) fail(path + ".domains", "expected an array");
  for (std::size_t q = 0; q < domains.size(); ++q) {
    const std::string dpath =
        path + ".domains[" + std::to_string(q + 1) + "]";
    const Json& d = domains[q];
    if (!d.is_array() || d.size() != 2) fail(dpath, "expected [lo, hi]");
    tr.domains.push_back({get_num(d[0], dpath), get_num(d[1], dpath)});
  }
  const Json& means = require_key(j, path, "center_means");
  if (!means.is_array()) fail(path + ".center_means", "expected an array");
  for (std::size_t q = 0; q < means.size(); ++q)
    tr.center_means.push_back(vec_from_json(
        means[q], path + ".center_means[" + std::to_string(q + 1) + "]"));
  if (tr.center_means.size() != tr.domains.size())
    fail(path, "domains and center_means must have equal length");
  return tr;
}

}  // namespace jsonutil

using jsonutil::Json;

ModelFile parse_model_file(const std::string& text) {
  return jsonutil::model_file_from_json(jsonutil::parse_text(text, "model"),
                                        "model");
}

std::string format_model_file(const ModelFile& file, int indent) {
  return jsonutil::model_file_to_json(file).dump(indent) + "\n";
}

SimScenario parse_scenario(const std::string& text) {
  SimScenario sc = jsonutil::scenario_from_json(
      jsonutil::parse_text(text, "scenario"), "scenario", true);
  sc.validate();
  return sc;
}

std::string format_scenario(const SimScenario& scenario, int indent) {
  return jsonutil::scenario_to_json(scenario).dump(indent) + "\n";
}

StudyConfig parse_study(const std::string& text) {
  const Json j = jsonutil::parse_text(text, "study");
  jsonutil::check_keys(j, "study",
                       {"schema", "scenario", "T_values", "reps", "fit",
                        "grid_points"});
  jsonutil::require_schema(j, "study", kStudySchema);
  StudyConfig cfg;
  cfg.scenario = jsonutil::scenario_from_json(
      jsonutil::require_key(j, "study", "scenario"), "study.scenario", false);
  const Json& tv = jsonutil::require_key(j, "study", "T_values");
  if (!tv.is_array() || tv.empty())
    jsonutil::fail("study.T_values", "expected a non-empty array");
  cfg.T_values.clear();
  for (std::size_t i = 0; i < tv.size(); ++i)
    cfg.T_values.push_back(jsonutil::get_int(
        tv[i], "study.T_values[" + std::to_string(i + 1) + "]"));
  cfg.n_reps = jsonutil::opt_int(j, "study", "reps", 50);
  if (j.contains("fit")) {
    const Json& fj = j["fit"];
    jsonutil::check_keys(fj, "study.fit",
                         {"n_basis", "lambda0", "tol", "max_outer"});
    cfg.n_basis = jsonutil::opt_int(fj, "study.fit", "n_basis", cfg.n_basis);
    cfg.lambda0 = jsonutil::opt_num(fj, "study.fit", "lambda0", cfg.lambda0);
    cfg.qreml.tol = jsonutil::opt_num(fj, "study.fit", "tol", cfg.qreml.tol);
    cfg.qreml.max_outer =
        jsonutil::opt_int(fj, "study.fit", "max_outer", cfg.qreml.max_outer);
  }
  cfg.grid_points = jsonutil::opt_int(j, "study", "grid_points",
                                      cfg.grid_points);
  return cfg;
}

std::string format_study(const StudyConfig& config, int indent) {
  Json j = Json::object();
  j["schema"] = kStudySchema;
  Json sj = jsonutil::scenario_to_json(config.scenario);
  sj.erase("schema");
  j["scenario"] = std::move(sj);
  j["T_values"] = config.T_values;
  j["reps"] = config.n_reps;
  Json fj = Json::object();
  fj["n_basis"] = config.n_basis;
  fj["lambda0"] = config.lambda0;
  fj["tol"] = config.qreml.tol;
  fj["max_outer"] = config.qreml.max_outer;
  j["fit"] = std::move(fj);
  j["grid_points"] = config.grid_points;
  return j.dump(indent) + "\n";
}

FittedModel parse_fitted_model(const std::string& report_text) {
  const Json j = jsonutil::parse_text(report_text, "report");
  jsonutil::require_schema(j, "report", kReportSchema);
  FittedModel fm;
  fm.spec = jsonutil::model_file_from_json(
                jsonutil::require_key(j, "report", "model"), "report.model")
                .spec;
  fm.transforms = jsonutil::transforms_from_json(
      jsonutil::require_key(j, "report", "transforms"), "report.transforms");
  fm.theta = jsonutil::vec_from_json(
      jsonutil::require_key(j, "report", "theta"), "report.theta");
  fm.lambda = jsonutil::vec_from_json(
      jsonutil::require_key(j, "report", "lambda"), "report.lambda");
  if (fm.transforms.domains.size() != fm.spec.smooths.size())
    jsonutil::fail("report.transforms",
                   "transform count does not match the smooth count");
  return fm;
}

}  // namespace splinehmm
