#include "splinehmm/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "splinehmm/errors.hpp"

namespace splinehmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBarrierBase = 1e10;

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

// Derivative of the inverse link expressed through the fitted value itself.
double link_deriv_from_value(Link link, double v) {
  switch (link) {
    case Link::identity:
      return 1.0;
    case Link::log:
      return v;
    case Link::logit:
      return v * (1.0 - v);
  }
  return 1.0;
}

bool params_valid(Family f, const double* p) {
  switch (f) {
    case Family::gaussian:
      return std::isfinite(p[0]) && std::isfinite(p[1]) && p[1] > 0.0;
    case Family::gamma:
      return std::isfinite(p[0]) && std::isfinite(p[1]) && p[0] > 0.0 &&
             p[1] > 0.0;
    case Family::vonmises:
      return std::isfinite(p[0]) && std::isfinite(p[1]) && p[1] >= 0.0;
    case Family::spline:
      return true;
  }
  return false;
}

std::string state_tag(int state) { return std::to_string(state + 1); }

// Design matrix over all rows with zeros at missing observations.
Eigen::MatrixXd design_skip_missing(const BasisConfig& cfg,
                                    const Eigen::VectorXd& x,
                                    const std::vector<char>& missing,
                                    bool full) {
  const int T = static_cast<int>(x.size());
  std::vector<int> idx;
  idx.reserve(T);
  for (int t = 0; t < T; ++t)
    if (!missing[t]) idx.push_back(t);
  Eigen::VectorXd xm(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) xm[r] = x[idx[r]];
  const Eigen::MatrixXd B =
      full ? bspline_design_full(cfg, xm) : bspline_design(cfg, xm);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(T, B.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(idx[r]) = B.row(r);
  return out;
}

using GammaMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>;

}  // namespace

// Per-theta intermediates shared by the likelihood and gradient paths.
// gamma holds one flattened (row-major) transition matrix per column; the
// homogeneous case keeps a single column, otherwise column t is the matrix
// governing the step into time t (column 0 unused).
struct CompiledModel::HotEval {
  bool want_values = false;
  Eigen::MatrixXd gamma;
  Eigen::MatrixXd avg;
  Eigen::MatrixXd logp;
  Eigen::VectorXd delta;
  std::vector<Eigen::MatrixXd> pvals;  // per stream: T x (N * n_params)
  std::vector<Eigen::MatrixXd> fvals;  // per stream: T x N spline densities
};

CompiledModel CompiledModel::compile(const ModelSpec& spec, const Dataset& data,
                                     const SmoothTransforms* reuse) {
  if (spec.n_states < 2) throw ConfigError("model needs at least two states");
  if (spec.streams.empty())
    throw ConfigError("model needs at least one observation stream");
  const int N = spec.n_states;
  const int T = data.rows();
  if (T < 2) throw InputError("data needs at least two rows");
  if (reuse && (reuse->domains.size() != spec.smooths.size() ||
                reuse->center_means.size() != spec.smooths.size()))
    throw InputError("stored transforms do not match the model's smooths");

  CompiledModel m;
  m.spec_ = spec;
  m.T_ = T;

  // Streams, their data and intercept slots.
  int next = 0;
  for (std::size_t s = 0; s < spec.streams.size(); ++s) {
    const StreamSpec& ss = spec.streams[s];
    CompiledStream cs;
    cs.column = data.require(ss.column);
    cs.family = ss.family;
    cs.x = data.values.col(cs.column);
    cs.missing.assign(T, 0);
    for (int t = 0; t < T; ++t) {
      const double x = cs.x[t];
      if (std::isnan(x)) {
        cs.missing[t] = 1;
        ++cs.n_missing;
        continue;
      }
      try {
        validate_support(ss.family, x);
      } catch (const DomainError& e) {
        throw InputError("column '" + ss.column + "', row " +
                         std::to_string(t + 1) + ": " + e.what());
      }
    }
    if (cs.n_missing == T)
      throw InputError("column '" + ss.column + "' has no observed values");
    const int np = family_n_params(ss.family);
    std::vector<Link> links = ss.links;
    if (links.empty())
      for (int p = 0; p < np; ++p) links.push_back(family_default_link(ss.family, p));
    if (static_cast<int>(links.size()) != np)
      throw ConfigError("stream '" + ss.column + "' needs " +
                        std::to_string(np) + " links, got " +
                        std::to_string(links.size()));
    cs.params.resize(np);
    for (int p = 0; p < np; ++p) {
      cs.params[p].resize(N);
      for (int i = 0; i < N; ++i) {
        CompiledParam& cp = cs.params[p][i];
        cp.link = links[p];
        cp.intercept = next++;
        cp.name = ss.column + "." + family_param_name(ss.family, p) + "[" +
                  state_tag(i) + "]";
        m.names_.push_back(cp.name);
      }
    }
    cs.density_smooth.assign(N, -1);
    m.streams_.push_back(std::move(cs));
  }

  // Off-diagonal transition intercepts, row-major.
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      if (i == j) continue;
      TpmEntry e;
      e.from = i;
      e.to = j;
      e.intercept = next++;
      m.names_.push_back("tpm[" + state_tag(i) + "->" + state_tag(j) + "]");
      m.tpm_.push_back(e);
    }

  if (spec.delta == DeltaPolicy::estimated) {
    m.delta_offset_ = next;
    for (int j = 1; j < N; ++j) {
      m.names_.push_back("delta[" + state_tag(j) + "]");
      ++next;
    }
  }
  m.layout_.n_fixed = next;

  // Smooth terms, designs and parameter blocks.
  std::map<std::string, std::shared_ptr<const Eigen::MatrixXd>> design_cache;
  for (std::size_t q = 0; q < spec.smooths.size(); ++q) {
    const SmoothSpec& sp = spec.smooths[q];
    CompiledSmooth sm;
    sm.spec = sp;

    // Resolve the data column the basis is evaluated on.
    int data_col = -1;
    const std::vector<char>* missing = nullptr;
    if (sp.kind == SmoothTargetKind::density) {
      if (sp.stream < 0 || sp.stream >= static_cast<int>(m.streams_.size()))
        throw ConfigError("density smooth references stream " +
                          std::to_string(sp.stream) + " which does not exist");
      CompiledStream& cs = m.streams_[sp.stream];
      if (cs.family != Family::spline)
        throw ConfigError("density smooth on stream '" +
                          spec.streams[sp.stream].column +
                          "' requires the spline family");
      if (sp.state < 0 || sp.state >= N)
        throw ConfigError("density smooth state out of range");
      if (cs.density_smooth[sp.state] >= 0)
        throw ConfigError("state " + state_tag(sp.state) + " of stream '" +
                          spec.streams[sp.stream].column +
                          "' already has a density smooth");
      if (sp.ident != Identifiability::drop_first)
        throw ConfigError("density smooths pin the first coefficient; other "
                          "identifiability choices are not meaningful");
      data_col = cs.column;
      missing = &cs.missing;
      sm.label = "f(" + spec.streams[sp.stream].column + ")[" +
                 state_tag(sp.state) + "]";
    } else {
      if (sp.covariate.empty())
        throw ConfigError("smooth needs a covariate column");
      data_col = data.require(sp.covariate);
      for (int t = 0; t < T; ++t)
        if (!std::isfinite(data.values(t, data_col)))
          throw InputError("covariate '" + sp.covariate +
                           "' has a missing or non-finite value at row " +
                           std::to_string(t + 1));
      if (sp.kind == SmoothTargetKind::tpm) {
        if (sp.from < 0 || sp.from >= N || sp.to < 0 || sp.to >= N)
          throw ConfigError("tpm smooth indices out of range");
        if (sp.from == sp.to)
          throw ConfigError("tpm smooths apply to off-diagonal entries only");
        sm.label = "s(" + sp.covariate + "):tpm[" + state_tag(sp.from) +
                   "->" + state_tag(sp.to) + "]";
      } else {
        if (sp.stream < 0 || sp.stream >= static_cast<int>(m.streams_.size()))
          throw ConfigError("predictor smooth references stream " +
                            std::to_string(sp.stream) +
                            " which does not exist");
        const CompiledStream& cs = m.streams_[sp.stream];
        if (cs.family == Family::spline)
          throw ConfigError("predictor smooths do not apply to spline-family "
                            "streams");
        if (sp.state < 0 || sp.state >= N)
          throw ConfigError("predictor smooth state out of range");
        const int np = family_n_params(cs.family);
        if (sp.param < 0 || sp.param >= np)
          throw ConfigError("predictor smooth parameter slot out of range");
        sm.label = "s(" + sp.covariate + "):" + spec.streams[sp.stream].column +
                   "." + family_param_name(cs.family, sp.param) + "[" +
                   state_tag(sp.state) + "]";
      }
    }
    const Eigen::VectorXd zcol = data.values.col(data_col);

    // Domain.
    BasisConfig cfg = sp.basis;
    if (reuse) {
      cfg.lo = reuse->domains[q][0];
      cfg.hi = reuse->domains[q][1];
    } else if (sp.domain_auto) {
      if (cfg.cyclic)
        throw ConfigError("cyclic smooths need an explicit period; automatic "
                          "domains are not supported");
      double lo = kInf, hi = -kInf;
      for (int t = 0; t < T; ++t) {
        if (missing && (*missing)[t]) continue;
        lo = std::min(lo, zcol[t]);
        hi = std::max(hi, zcol[t]);
      }
      if (!(lo < hi))
        throw InputError("cannot resolve a domain for '" + sm.label +
                         "': the data column has no spread");
      cfg.lo = lo;
      cfg.hi = hi;
    }
    sm.spec.basis.lo = cfg.lo;
    sm.spec.basis.hi = cfg.hi;

    // Identifiability: both drop_first and center spend one coefficient, so
    // the full basis always has K+1 functions unless nothing is constrained.
    const bool density = sp.kind == SmoothTargetKind::density;
    BasisConfig full_cfg = cfg;
    if (sp.ident == Identifiability::drop_first || density) {
      full_cfg.constraint = Constraint::drop_first_coef;
    } else if (sp.ident == Identifiability::center) {
      full_cfg.constraint = Constraint::none;
      full_cfg.K = cfg.K + 1;
    } else {
      full_cfg.constraint = Constraint::none;
    }
    full_cfg.validate();

    if (sp.ident == Identifiability::center) {
      Eigen::MatrixXd S_full;
      const int kf = full_cfg.num_basis();
      if (full_cfg.cyclic && sp.penalty == PenaltyKind::difference)
        S_full = cyclic_penalty(kf, full_cfg.penalty_order, Constraint::none);
      else if (sp.penalty == PenaltyKind::difference)
        S_full = difference_penalty(kf, full_cfg.penalty_order,
                                    Constraint::none);
      else
        S_full = derivative_penalty(full_cfg);
      sm.center_Z = centering_nullbasis(kf);
      const Eigen::MatrixXd S_red =
          sm.center_Z.transpose() * S_full * sm.center_Z;
      sm.term = penalty_eigen(full_cfg, S_red);
    } else {
      sm.term = make_smooth_term(full_cfg, sp.penalty);
    }
    sm.size = static_cast<int>(sm.term.S.rows());

    // Design matrix; density smooths keep the full standardized basis.
    std::ostringstream key;
    key << static_cast<int>(sp.kind) << '|' << data_col << '|' << full_cfg.K
        << '|' << full_cfg.degree << '|' << full_cfg.lo << '|' << full_cfg.hi
        << '|' << full_cfg.cyclic << '|' << static_cast<int>(sp.ident) << '|'
        << static_cast<int>(full_cfg.constraint);
    auto hit = design_cache.find(key.str());
    if (hit != design_cache.end() &&
        sp.ident != Identifiability::center) {
      sm.design = hit->second;
      if (density) sm.norm_consts = basis_integrals(full_cfg);
    } else if (density) {
      sm.norm_consts = basis_integrals(full_cfg);
      Eigen::MatrixXd B = design_skip_missing(full_cfg, zcol, *missing, true);
      for (int k = 0; k < B.cols(); ++k) B.col(k) /= sm.norm_consts[k];
      sm.design = std::make_shared<const Eigen::MatrixXd>(std::move(B));
      design_cache[key.str()] = sm.design;
    } else if (sp.ident == Identifiability::center) {
      Eigen::MatrixXd B = bspline_design_full(full_cfg, zcol);
      if (reuse) {
        if (reuse->center_means[q].size() != B.cols())
          throw InputError("stored centering means do not match smooth '" +
                           sm.label + "'");
        sm.center_means = reuse->center_means[q];
      } else {
        sm.center_means = B.colwise().mean();
      }
      B.rowwise() -= sm.center_means.transpose();
      sm.design = std::make_shared<const Eigen::MatrixXd>(B * sm.center_Z);
    } else {
      sm.design =
          std::make_shared<const Eigen::MatrixXd>(bspline_design(full_cfg, zcol));
      design_cache[key.str()] = sm.design;
    }
    if (!density && sm.design->cols() != sm.size)
      throw ModelError("internal: design and penalty dimensions disagree for '" +
                       sm.label + "'");

    // Attach to its target.
    const int id = static_cast<int>(m.smooths_.size());
    if (density) {
      m.streams_[sp.stream].density_smooth[sp.state] = id;
    } else if (sp.kind == SmoothTargetKind::tpm) {
      for (TpmEntry& e : m.tpm_)
        if (e.from == sp.from && e.to == sp.to) e.smooth_ids.push_back(id);
      ++m.tpm_varying_;
    } else {
      m.streams_[sp.stream].params[sp.param][sp.state].smooth_ids.push_back(id);
    }

    ParamBlock blk;
    blk.offset = next;
    blk.size = sm.size;
    next += sm.size;
    for (int k = 0; k < sm.size; ++k)
      m.names_.push_back(sm.label + ".b" + std::to_string(k + 1));
    m.layout_.blocks.push_back(blk);
    m.smooths_.push_back(std::move(sm));
  }

  // Every spline-family state needs its density smooth.
  for (std::size_t s = 0; s < m.streams_.size(); ++s) {
    const CompiledStream& cs = m.streams_[s];
    if (cs.family != Family::spline) continue;
    for (int i = 0; i < N; ++i)
      if (cs.density_smooth[i] < 0)
        throw ConfigError("state " + state_tag(i) + " of stream '" +
                          spec.streams[s].column +
                          "' is missing its density smooth");
  }

  if (m.layout_.dim() != static_cast<int>(m.names_.size()))
    throw ModelError("internal: parameter naming out of sync");
  return m;
}

SmoothTransforms CompiledModel::transforms() const {
  SmoothTransforms tr;
  for (const CompiledSmooth& sm : smooths_) {
    tr.domains.push_back({sm.term.config.lo, sm.term.config.hi});
    tr.center_means.push_back(sm.center_means);
  }
  return tr;
}

Eigen::VectorXd CompiledModel::lambda0() const {
  // Start near-parametric and let the updates relax: strong for transition
  // smooths, stronger for mean/dispersion smooths, mild for densities where
  // an excessive first-iteration penalty stalls the updates.
  Eigen::VectorXd l0(smooths_.size());
  for (std::size_t q = 0; q < smooths_.size(); ++q) {
    const SmoothSpec& sp = smooths_[q].spec;
    double def = 1e3;
    if (sp.kind == SmoothTargetKind::predictor) def = 1e5;
    if (sp.kind == SmoothTargetKind::density) def = 30.0;
    l0[q] = sp.lambda0.value_or(def);
  }
  return l0;
}

Eigen::VectorXd CompiledModel::init_theta() const {
  const int N = spec_.n_states;
  Eigen::VectorXd th = Eigen::VectorXd::Zero(dim());

  for (std::size_t s = 0; s < streams_.size(); ++s) {
    const CompiledStream& cs = streams_[s];
    const int np = family_n_params(cs.family);
    if (np == 0) continue;
    std::vector<double> xs;
    xs.reserve(T_);
    for (int t = 0; t < T_; ++t)
      if (!cs.missing[t]) xs.push_back(cs.x[t]);
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : xs) var += (v - mean) * (v - mean);
    double sd = xs.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    if (!(sd > 0.0)) sd = std::max(1.0, std::abs(mean));

    double kappa0 = 1.0;
    if (cs.family == Family::vonmises) {
      double c = 0.0, sn = 0.0;
      for (double v : xs) {
        c += std::cos(v);
        sn += std::sin(v);
      }
      const double rbar = std::sqrt(c * c + sn * sn) / n;
      const double r2 = rbar * rbar;
      kappa0 = r2 < 1.0 ? rbar * (2.0 - r2) / (1.0 - r2) : 100.0;
      kappa0 = std::min(std::max(kappa0, 0.1), 100.0);
    }

    for (int i = 0; i < N; ++i) {
      const double q = quantile_sorted(xs, (2.0 * i + 1.0) / (2.0 * N));
      for (int p = 0; p < np; ++p) {
        const CompiledParam& cp = cs.params[p][i];
        double v = 0.0;
        switch (cs.family) {
          case Family::gaussian:
            v = p == 0 ? q : sd;
            break;
          case Family::gamma:
            v = p == 0 ? std::max(q, 1e-8) : sd;
            break;
          case Family::vonmises:
            v = p == 0 ? q : kappa0;
            break;
          case Family::spline:
            break;
        }
        th[cp.intercept] = link_apply(cp.link, v);
      }
    }
  }

  // User overrides on the natural scale; NaN keeps the default.
  const auto& ov = spec_.init.stream_params;
  if (!ov.empty()) {
    if (ov.size() != streams_.size())
      throw ConfigError("init values must cover every stream");
    for (std::size_t s = 0; s < streams_.size(); ++s) {
      const CompiledStream& cs = streams_[s];
      const int np = family_n_params(cs.family);
      if (static_cast<int>(ov[s].size()) != np)
        throw ConfigError("init values for stream " + std::to_string(s + 1) +
                          " must cover every parameter");
      for (int p = 0; p < np; ++p) {
        if (static_cast<int>(ov[s][p].size()) != N)
          throw ConfigError("init values need one entry per state");
        for (int i = 0; i < N; ++i) {
          const double v = ov[s][p][i];
          if (std::isnan(v)) continue;
          th[cs.params[p][i].intercept] = link_apply(cs.params[p][i].link, v);
        }
      }
    }
  }

  const double self = spec_.init.tpm_self_prob.value_or(0.9);
  if (!(self > 0.0 && self < 1.0))
    throw ConfigError("tpm self probability must lie strictly between 0 and 1");
  const double eta0 = std::log((1.0 - self) / ((N - 1) * self));
  for (const TpmEntry& e : tpm_) th[e.intercept] = eta0;
  return th;
}

bool CompiledModel::build_hot(const Eigen::VectorXd& theta, HotEval& ev) const {
  const int N = spec_.n_states;
  const int T = T_;
  if (theta.size() != dim() || !theta.allFinite()) return false;
  const int ncell = N * N;

  // Transition matrices.
  if (tpm_homogeneous()) {
    ev.gamma.resize(ncell, 1);
    ev.avg.setZero(N, N);
    for (int i = 0; i < N; ++i) {
      double mx = 0.0;
      for (const TpmEntry& e : tpm_)
        if (e.from == i) mx = std::max(mx, theta[e.intercept]);
      double denom = std::exp(-mx);
      ev.avg(i, i) = denom;
      for (const TpmEntry& e : tpm_)
        if (e.from == i) {
          const double w = std::exp(theta[e.intercept] - mx);
          ev.avg(i, e.to) = w;
          denom += w;
        }
      ev.avg.row(i) /= denom;
      for (int j = 0; j < N; ++j) ev.gamma(i * N + j, 0) = ev.avg(i, j);
    }
  } else {
    Eigen::MatrixXd eta(T, tpm_.size());
    for (std::size_t e = 0; e < tpm_.size(); ++e) {
      eta.col(e).setConstant(theta[tpm_[e].intercept]);
      for (int sid : tpm_[e].smooth_ids)
        eta.col(e) += *smooths_[sid].design * block(theta, sid);
    }
    if (!eta.allFinite()) return false;
    ev.gamma.setZero(ncell, T);
    ev.avg.setZero(N, N);
    for (int t = 1; t < T; ++t) {
      std::size_t e = 0;
      for (int i = 0; i < N; ++i) {
        double mx = 0.0;
        for (int j = 0; j < N; ++j)
          if (j != i) mx = std::max(mx, eta(t, e + (j > i ? j - 1 : j)));
        const double wdiag = std::exp(-mx);
        double rowsum = wdiag;
        for (int j = 0; j < N; ++j) {
          if (j == i) continue;
          const double wj = std::exp(eta(t, e + (j > i ? j - 1 : j)) - mx);
          ev.gamma(i * N + j, t) = wj;
          rowsum += wj;
        }
        ev.gamma(i * N + i, t) = wdiag;
        for (int j = 0; j < N; ++j) {
          ev.gamma(i * N + j, t) /= rowsum;
          ev.avg(i, j) += ev.gamma(i * N + j, t);
        }
        e += N - 1;
      }
    }
    ev.avg /= static_cast<double>(T - 1);
  }
  if (!ev.gamma.allFinite()) return false;

  // Initial distribution.
  switch (spec_.delta) {
    case DeltaPolicy::uniform:
      ev.delta = Eigen::VectorXd::Constant(N, 1.0 / N);
      break;
    case DeltaPolicy::estimated:
      ev.delta = spline_weights(theta.segment(delta_offset_, N - 1));
      break;
    case DeltaPolicy::stationary: {
      Eigen::MatrixXd M =
          Eigen::MatrixXd::Identity(N, N) - ev.avg.transpose();
      M.row(N - 1).setOnes();
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);
      rhs[N - 1] = 1.0;
      Eigen::VectorXd d = M.partialPivLu().solve(rhs);
      if (!d.allFinite() || d.minCoeff() < -1e-9) return false;
      d = d.cwiseMax(0.0);
      const double s = d.sum();
      if (!(s > 0.0)) return false;
      ev.delta = d / s;
      break;
    }
  }

  // Emission log densities.
  ev.logp.setZero(T, N);
  if (ev.want_values) {
    ev.pvals.assign(streams_.size(), Eigen::MatrixXd());
    ev.fvals.assign(streams_.size(), Eigen::MatrixXd());
  }
  for (std::size_t s = 0; s < streams_.size(); ++s) {
    const CompiledStream& cs = streams_[s];
    if (cs.family == Family::spline) {
      if (ev.want_values) ev.fvals[s].setZero(T, N);
      for (int i = 0; i < N; ++i) {
        const CompiledSmooth& sm = smooths_[cs.density_smooth[i]];
        const Eigen::VectorXd alpha =
            spline_weights(block(theta, cs.density_smooth[i]));
        const Eigen::VectorXd f = *sm.design * alpha;
        for (int t = 0; t < T; ++t) {
          if (cs.missing[t]) continue;
          ev.logp(t, i) += std::log(f[t]);
          if (ev.want_values) ev.fvals[s](t, i) = f[t];
        }
      }
      continue;
    }
    const int np = family_n_params(cs.family);
    if (ev.want_values) ev.pvals[s].resize(T, N * np);
    std::array<Eigen::VectorXd, 2> v;
    for (int i = 0; i < N; ++i) {
      for (int p = 0; p < np; ++p) {
        const CompiledParam& cp = cs.params[p][i];
        if (cp.smooth_ids.empty()) {
          v[p] = Eigen::VectorXd::Constant(
              T, link_inverse(cp.link, theta[cp.intercept]));
        } else {
          Eigen::VectorXd eta =
              Eigen::VectorXd::Constant(T, theta[cp.intercept]);
          for (int sid : cp.smooth_ids)
            eta += *smooths_[sid].design * block(theta, sid);
          const Link link = cp.link;
          v[p] = eta.unaryExpr(
              [link](double e) { return link_inverse(link, e); });
        }
        if (ev.want_values) ev.pvals[s].col(i * np + p) = v[p];
      }
      double pp[2] = {0.0, 0.0};
      for (int t = 0; t < T; ++t) {
        if (cs.missing[t]) continue;
        for (int p = 0; p < np; ++p) pp[p] = v[p][t];
        if (!params_valid(cs.family, pp)) return false;
        ev.logp(t, i) += log_density(cs.family, cs.x[t], pp);
      }
    }
  }
  // NaN and +inf are failures; -inf is a legitimate impossible observation.
  if (!(ev.logp.array() < kInf).all()) return false;
  return true;
}

double CompiledModel::neg_loglik(const Eigen::VectorXd& theta) const {
  HotEval ev;
  if (!build_hot(theta, ev)) return kInf;
  const int N = spec_.n_states;
  const int T = T_;
  const bool homog = tpm_homogeneous();
  Eigen::RowVectorXd phi(N), vrow(N), prow(N);
  double ll = 0.0;
  for (int t = 0; t < T; ++t) {
    double sh = ev.logp.row(t).maxCoeff();
    if (!std::isfinite(sh)) sh = 0.0;
    prow = (ev.logp.row(t).array() - sh).exp();
    if (t == 0) {
      vrow = ev.delta.transpose().cwiseProduct(prow);
    } else {
      GammaMap G(ev.gamma.col(homog ? 0 : t).data(), N, N);
      vrow = (phi * G).cwiseProduct(prow);
    }
    const double c = vrow.sum();
    if (!(c > 0.0) || !std::isfinite(c)) return kInf;
    phi = vrow / c;
    ll += std::log(c) + sh;
  }
  return -ll;
}

NllEval CompiledModel::neg_loglik_grad(const Eigen::VectorXd& theta) const {
  NllEval out;
  HotEval ev;
  ev.want_values = true;
  if (!build_hot(theta, ev)) return out;
  const int N = spec_.n_states;
  const int T = T_;
  const bool homog = tpm_homogeneous();

  // Scaled forward pass, keeping everything the backward pass needs.
  Eigen::MatrixXd prob(T, N), alpha(T, N);
  Eigen::VectorXd scale(T);
  double ll = 0.0;
  {
    Eigen::RowVectorXd phi(N), vrow(N);
    for (int t = 0; t < T; ++t) {
      double sh = ev.logp.row(t).maxCoeff();
      if (!std::isfinite(sh)) sh = 0.0;
      prob.row(t) = (ev.logp.row(t).array() - sh).exp();
      if (t == 0) {
        vrow = ev.delta.transpose().cwiseProduct(prob.row(0));
      } else {
        GammaMap G(ev.gamma.col(homog ? 0 : t).data(), N, N);
        vrow = (phi * G).cwiseProduct(prob.row(t));
      }
      const double c = vrow.sum();
      if (!(c > 0.0) || !std::isfinite(c)) return out;
      alpha.row(t) = vrow / c;
      scale[t] = c;
      phi = alpha.row(t);
      ll += std::log(c) + sh;
    }
  }

  Eigen::MatrixXd beta(T, N);
  beta.row(T - 1).setOnes();
  for (int t = T - 2; t >= 0; --t) {
    GammaMap G(ev.gamma.col(homog ? 0 : t + 1).data(), N, N);
    const Eigen::VectorXd w =
        prob.row(t + 1).cwiseProduct(beta.row(t + 1)).transpose() /
        scale[t + 1];
    beta.row(t) = (G * w).transpose();
  }
  const Eigen::MatrixXd post = alpha.cwiseProduct(beta);

  Eigen::VectorXd gl = Eigen::VectorXd::Zero(dim());

  // Emission terms.
  for (std::size_t s = 0; s < streams_.size(); ++s) {
    const CompiledStream& cs = streams_[s];
    if (cs.family == Family::spline) {
      for (int i = 0; i < N; ++i) {
        const int id = cs.density_smooth[i];
        const CompiledSmooth& sm = smooths_[id];
        const Eigen::VectorXd alpha_w = spline_weights(block(theta, id));
        Eigen::VectorXd r = Eigen::VectorXd::Zero(T);
        double W = 0.0;
        for (int t = 0; t < T; ++t) {
          if (cs.missing[t]) continue;
          const double f = ev.fvals[s](t, i);
          const double w = post(t, i);
          if (f > 0.0 && w > 0.0) r[t] = w / f;
          W += w;
        }
        const int K = sm.size;
        Eigen::VectorXd tmp = sm.design->rightCols(K).transpose() * r;
        tmp.array() -= W;
        gl.segment(layout_.blocks[id].offset, K) +=
            alpha_w.tail(K).cwiseProduct(tmp);
      }
      continue;
    }
    const int np = family_n_params(cs.family);
    Eigen::MatrixXd coef(T, np);
    double pp[2] = {0.0, 0.0};
    double g2[2] = {0.0, 0.0};
    for (int i = 0; i < N; ++i) {
      coef.setZero();
      for (int t = 0; t < T; ++t) {
        if (cs.missing[t]) continue;
        for (int p = 0; p < np; ++p) pp[p] = ev.pvals[s](t, i * np + p);
        log_density_grad(cs.family, cs.x[t], pp, g2);
        const double w = post(t, i);
        for (int p = 0; p < np; ++p)
          coef(t, p) =
              w * g2[p] * link_deriv_from_value(cs.params[p][i].link, pp[p]);
      }
      for (int p = 0; p < np; ++p) {
        const CompiledParam& cp = cs.params[p][i];
        gl[cp.intercept] += coef.col(p).sum();
        for (int sid : cp.smooth_ids)
          gl.segment(layout_.blocks[sid].offset, smooths_[sid].size) +=
              smooths_[sid].design->transpose() * coef.col(p);
      }
    }
  }

  // Transition terms, including the stationary-start correction.
  {
    const bool with_delta = spec_.delta == DeltaPolicy::stationary;
    Eigen::VectorXd vtil;
    if (with_delta) {
      Eigen::VectorXd u(N);
      for (int i = 0; i < N; ++i)
        u[i] = ev.delta[i] > 0.0 ? post(0, i) / ev.delta[i] : 0.0;
      Eigen::MatrixXd M =
          Eigen::MatrixXd::Identity(N, N) - ev.avg.transpose();
      M.row(N - 1).setOnes();
      vtil = M.transpose().partialPivLu().solve(u);
      vtil[N - 1] = 0.0;
    }
    std::vector<double> isum(tpm_.size(), 0.0);
    bool any_smooth = false;
    for (const TpmEntry& e : tpm_) any_smooth |= !e.smooth_ids.empty();
    Eigen::MatrixXd tw;
    if (any_smooth) tw.setZero(T, tpm_.size());
    Eigen::VectorXd rowdot(N);
    const double Tm1 = static_cast<double>(T - 1);
    for (int t = 1; t < T; ++t) {
      GammaMap G(ev.gamma.col(homog ? 0 : t).data(), N, N);
      if (with_delta) rowdot = G * vtil;
      for (std::size_t e = 0; e < tpm_.size(); ++e) {
        const int i = tpm_[e].from;
        const int j = tpm_[e].to;
        const double gij = G(i, j);
        const double xi =
            alpha(t - 1, i) * gij * prob(t, j) * beta(t, j) / scale[t];
        double w = xi - gij * post(t - 1, i);
        if (with_delta)
          w += ev.delta[i] * gij * (vtil[j] - rowdot[i]) / Tm1;
        isum[e] += w;
        if (any_smooth && !tpm_[e].smooth_ids.empty()) tw(t, e) = w;
      }
    }
    for (std::size_t e = 0; e < tpm_.size(); ++e) {
      gl[tpm_[e].intercept] += isum[e];
      for (int sid : tpm_[e].smooth_ids)
        gl.segment(layout_.blocks[sid].offset, smooths_[sid].size) +=
            smooths_[sid].design->transpose() * tw.col(e);
    }
  }

  if (spec_.delta == DeltaPolicy::estimated)
    for (int j = 1; j < N; ++j)
      gl[delta_offset_ + j - 1] += post(0, j) - ev.delta[j];

  if (!gl.allFinite()) return out;
  out.value = -ll;
  out.grad = -gl;
  out.ok = true;
  return out;
}

TpmSequence CompiledModel::build_tpm(const Eigen::VectorXd& theta) const {
  HotEval ev;
  if (!build_hot(theta, ev))
    throw NumericalError(
        "parameters produced non-finite transition or emission quantities");
  const int N = spec_.n_states;
  if (tpm_homogeneous()) {
    GammaMap G(ev.gamma.col(0).data(), N, N);
    TpmSequence seq = TpmSequence::constant(G, T_);
    seq.validate();
    return seq;
  }
  std::vector<Eigen::MatrixXd> slices;
  slices.reserve(T_ - 1);
  for (int t = 1; t < T_; ++t)
    slices.emplace_back(GammaMap(ev.gamma.col(t).data(), N, N));
  TpmSequence seq = TpmSequence::varying(std::move(slices), T_);
  seq.validate();
  return seq;
}

EmissionMatrix CompiledModel::build_emissions(const Eigen::VectorXd& theta) const {
  HotEval ev;
  if (!build_hot(theta, ev))
    throw NumericalError(
        "parameters produced non-finite transition or emission quantities");
  return EmissionMatrix{std::move(ev.logp)};
}

Eigen::VectorXd CompiledModel::initial_distribution(
    const Eigen::VectorXd& theta, const TpmSequence& tpm) const {
  const int N = spec_.n_states;
  switch (spec_.delta) {
    case DeltaPolicy::uniform:
      return Eigen::VectorXd::Constant(N, 1.0 / N);
    case DeltaPolicy::estimated:
      return spline_weights(theta.segment(delta_offset_, N - 1));
    case DeltaPolicy::stationary:
      return stationary(tpm.average());
  }
  throw ModelError("unknown initial distribution policy");
}

Eigen::VectorXd CompiledModel::block(const Eigen::VectorXd& theta,
                                     int smooth_id) const {
  const ParamBlock& b = layout_.blocks[smooth_id];
  return theta.segment(b.offset, b.size);
}

double CompiledModel::penalty_value(const Eigen::VectorXd& theta,
                                    const Eigen::VectorXd& lambda) const {
  double v = 0.0;
  for (std::size_t q = 0; q < smooths_.size(); ++q) {
    const Eigen::VectorXd b = block(theta, static_cast<int>(q));
    v += 0.5 * lambda[q] * b.dot(smooths_[q].term.S * b);
  }
  return v;
}

void CompiledModel::add_penalty_grad(const Eigen::VectorXd& theta,
                                     const Eigen::VectorXd& lambda,
                                     Eigen::VectorXd& grad) const {
  for (std::size_t q = 0; q < smooths_.size(); ++q) {
    const ParamBlock& blk = layout_.blocks[q];
    grad.segment(blk.offset, blk.size) +=
        lambda[q] * (smooths_[q].term.S * theta.segment(blk.offset, blk.size));
  }
}

void CompiledModel::add_penalty_hessian(const Eigen::VectorXd& lambda,
                                        Eigen::MatrixXd& hess) const {
  for (std::size_t q = 0; q < smooths_.size(); ++q) {
    const ParamBlock& blk = layout_.blocks[q];
    hess.block(blk.offset, blk.offset, blk.size, blk.size) +=
        lambda[q] * smooths_[q].term.S;
  }
}

Eigen::VectorXd CompiledModel::penalty_quad_forms(
    const Eigen::VectorXd& theta) const {
  Eigen::VectorXd qf(smooths_.size());
  for (std::size_t q = 0; q < smooths_.size(); ++q) {
    const Eigen::VectorXd b = block(theta, static_cast<int>(q));
    qf[q] = b.dot(smooths_[q].term.S * b);
  }
  return qf;
}

double CompiledModel::penalized_nll(const Eigen::VectorXd& theta,
                                    const Eigen::VectorXd& lambda) const {
  const double v = neg_loglik(theta);
  if (!std::isfinite(v)) return kBarrierBase + theta.squaredNorm();
  return v + penalty_value(theta, lambda);
}

NllEval CompiledModel::penalized_grad(const Eigen::VectorXd& theta,
                                      const Eigen::VectorXd& lambda) const {
  NllEval e = neg_loglik_grad(theta);
  if (!e.ok) {
    e.value = kBarrierBase + theta.squaredNorm();
    e.grad = 2.0 * theta;
    e.ok = false;
    return e;
  }
  e.value += penalty_value(theta, lambda);
  add_penalty_grad(theta, lambda, e.grad);
  return e;
}

Eigen::MatrixXd CompiledModel::smooth_design_at(int smooth_id,
                                                const Eigen::VectorXd& z) const {
  const CompiledSmooth& sm = smooths_[smooth_id];
  if (sm.spec.kind == SmoothTargetKind::density) {
    Eigen::MatrixXd B = bspline_design_full(sm.term.config, z);
    for (int k = 0; k < B.cols(); ++k) B.col(k) /= sm.norm_consts[k];
    return B;
  }
  if (sm.spec.ident == Identifiability::center) {
    Eigen::MatrixXd B = bspline_design(sm.term.config, z);
    B.rowwise() -= sm.center_means.transpose();
    return B * sm.center_Z;
  }
  return bspline_design(sm.term.config, z);
}

Eigen::VectorXd CompiledModel::smooth_curve(int smooth_id,
                                            const Eigen::VectorXd& z,
                                            const Eigen::VectorXd& theta) const {
  const Eigen::MatrixXd D = smooth_design_at(smooth_id, z);
  if (smooths_[smooth_id].spec.kind == SmoothTargetKind::density)
    return D * spline_weights(block(theta, smooth_id));
  return D * block(theta, smooth_id);
}

Eigen::VectorXd CompiledModel::tpm_curve(int smooth_id, const Eigen::VectorXd& z,
                                         const Eigen::VectorXd& theta) const {
  const SmoothSpec& sp = smooths_[smooth_id].spec;
  if (sp.kind != SmoothTargetKind::tpm)
    throw ArgumentError("tpm_curve needs a transition smooth");
  const int N = spec_.n_states;
  const int n = static_cast<int>(z.size());
  Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(n, N);
  for (const TpmEntry& e : tpm_) {
    if (e.from != sp.from) continue;
    Eigen::VectorXd col = Eigen::VectorXd::Constant(n, theta[e.intercept]);
    for (int sid : e.smooth_ids)
      if (smooths_[sid].spec.covariate == sp.covariate)
        col += smooth_design_at(sid, z) * block(theta, sid);
    eta.col(e.to) = col;
  }
  Eigen::VectorXd out(n);
  for (int r = 0; r < n; ++r) {
    double mx = 0.0;
    for (int j = 0; j < N; ++j)
      if (j != sp.from) mx = std::max(mx, eta(r, j));
    double denom = std::exp(-mx);
    for (int j = 0; j < N; ++j)
      if (j != sp.from) denom += std::exp(eta(r, j) - mx);
    out[r] = std::exp(eta(r, sp.to) - mx) / denom;
  }
  return out;
}

}  // namespace splinehmm
