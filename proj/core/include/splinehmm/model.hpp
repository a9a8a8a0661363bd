#pragma once

#include <Eigen/Dense>
#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "splinehmm/basis.hpp"
#include "splinehmm/dataset.hpp"
#include "splinehmm/emission.hpp"
#include "splinehmm/hmm.hpp"

namespace splinehmm {

enum class SmoothTargetKind { density, predictor, tpm };

// How a smooth is made identifiable next to an intercept: drop the first
// basis coefficient, or absorb the sum-to-zero (centering) constraint.
enum class Identifiability { none, drop_first, center };

enum class DeltaPolicy { stationary, uniform, estimated };

struct SmoothSpec {
  SmoothTargetKind kind = SmoothTargetKind::predictor;
  int stream = -1;  // density, predictor
  int state = -1;   // density, predictor
  int param = -1;   // predictor parameter slot
  int from = -1;    // tpm row
  int to = -1;      // tpm column
  std::string covariate;
  BasisConfig basis;
  PenaltyKind penalty = PenaltyKind::difference;
  Identifiability ident = Identifiability::drop_first;
  std::optional<double> lambda0;
  bool domain_auto = false;
};

struct StreamSpec {
  std::string column;
  Family family = Family::gaussian;
  std::vector<Link> links;  // per parameter; empty = family defaults
};

struct InitOverrides {
  // [stream][param][state] natural-scale starting values.
  std::vector<std::vector<std::vector<double>>> stream_params;
  std::optional<double> tpm_self_prob;
};

struct ModelSpec {
  int n_states = 2;
  std::vector<StreamSpec> streams;
  std::vector<SmoothSpec> smooths;
  DeltaPolicy delta = DeltaPolicy::stationary;
  InitOverrides init;
};

// theta = (a, b_1, ..., b_p): fixed effects first, then one block per smooth.
struct ParamBlock {
  int offset = 0;
  int size = 0;
};

struct ParamLayout {
  int n_fixed = 0;
  std::vector<ParamBlock> blocks;
  int dim() const {
    int d = n_fixed;
    for (const auto& b : blocks) d += b.size;
    return d;
  }
};

// Data-dependent pieces that must be reused verbatim when re-applying a
// fitted model to new data.
struct SmoothTransforms {
  std::vector<std::array<double, 2>> domains;
  std::vector<Eigen::VectorXd> center_means;  // empty unless centered
};

struct CompiledSmooth {
  SmoothSpec spec;  // domain resolved
  SmoothTerm term;
  // T x size design over the free coefficients; density smooths instead hold
  // the full standardized basis (num_basis columns scaled by 1/integral).
  std::shared_ptr<const Eigen::MatrixXd> design;
  Eigen::VectorXd center_means;
  Eigen::MatrixXd center_Z;
  Eigen::VectorXd norm_consts;
  std::string label;
  int size = 0;  // free coefficients
};

struct CompiledParam {
  int intercept = -1;
  std::vector<int> smooth_ids;
  Link link = Link::identity;
  std::string name;
};

struct CompiledStream {
  int column = -1;
  Family family = Family::gaussian;
  Eigen::VectorXd x;
  std::vector<char> missing;
  int n_missing = 0;
  std::vector<std::vector<CompiledParam>> params;  // [param][state]
  std::vector<int> density_smooth;                 // [state], spline family
};

struct TpmEntry {
  int from = 0, to = 0;
  int intercept = -1;
  std::vector<int> smooth_ids;
};

// Gradient evaluation result for the unpenalized negative log likelihood.
struct NllEval {
  double value = 0.0;
  Eigen::VectorXd grad;
  bool ok = false;
};

class CompiledModel {
 public:
  static CompiledModel compile(const ModelSpec& spec, const Dataset& data,
                               const SmoothTransforms* reuse = nullptr);

  const ModelSpec& spec() const { return spec_; }
  const ParamLayout& layout() const { return layout_; }
  const std::vector<CompiledSmooth>& smooths() const { return smooths_; }
  const std::vector<CompiledStream>& streams() const { return streams_; }
  const std::vector<TpmEntry>& tpm_entries() const { return tpm_; }
  bool tpm_homogeneous() const { return tpm_varying_ == 0; }
  int T() const { return T_; }
  int n_states() const { return spec_.n_states; }
  int dim() const { return layout_.dim(); }
  SmoothTransforms transforms() const;
  const std::vector<std::string>& param_names() const { return names_; }
  Eigen::VectorXd lambda0() const;

  // Documented default starting values (quantile spread over states).
  Eigen::VectorXd init_theta() const;

  // Validated public assembly.
  TpmSequence build_tpm(const Eigen::VectorXd& theta) const;
  EmissionMatrix build_emissions(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd initial_distribution(const Eigen::VectorXd& theta,
                                       const TpmSequence& tpm) const;

  // Unpenalized negative log likelihood; +infinity signals an invalid theta
  // (the optimizer substitutes its barrier).
  double neg_loglik(const Eigen::VectorXd& theta) const;

  // Analytic gradient of neg_loglik via the forward-backward identity.
  NllEval neg_loglik_grad(const Eigen::VectorXd& theta) const;

  // Penalty helpers over the smooth blocks.
  Eigen::VectorXd block(const Eigen::VectorXd& theta, int smooth_id) const;
  double penalty_value(const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& lambda) const;
  void add_penalty_grad(const Eigen::VectorXd& theta,
                        const Eigen::VectorXd& lambda,
                        Eigen::VectorXd& grad) const;
  void add_penalty_hessian(const Eigen::VectorXd& lambda,
                           Eigen::MatrixXd& hess) const;
  // b_i' S_i b_i per smooth.
  Eigen::VectorXd penalty_quad_forms(const Eigen::VectorXd& theta) const;

  double penalized_nll(const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& lambda) const;
  // Gradient of the penalized objective; falls back to the barrier gradient
  // 2*theta when the likelihood is not finite (ok=false in that case).
  NllEval penalized_grad(const Eigen::VectorXd& theta,
                         const Eigen::VectorXd& lambda) const;

  // Design rows for a smooth at new covariate values using the stored
  // training transform.
  Eigen::MatrixXd smooth_design_at(int smooth_id,
                                   const Eigen::VectorXd& z) const;
  // Smooth contribution on the predictor scale (predictor/tpm smooths) or
  // the density values themselves (density smooths).
  Eigen::VectorXd smooth_curve(int smooth_id, const Eigen::VectorXd& z,
                               const Eigen::VectorXd& theta) const;
  // Transition probability curve gamma_{from,to}(z) along the covariate of
  // the given tpm smooth; smooths on other covariates contribute zero.
  Eigen::VectorXd tpm_curve(int smooth_id, const Eigen::VectorXd& z,
                            const Eigen::VectorXd& theta) const;

 private:
  struct HotEval;
  bool build_hot(const Eigen::VectorXd& theta, HotEval& ev) const;

  ModelSpec spec_;
  ParamLayout layout_;
  std::vector<CompiledSmooth> smooths_;
  std::vector<CompiledStream> streams_;
  std::vector<TpmEntry> tpm_;
  int tpm_varying_ = 0;  // number of tpm entries with smooths
  int delta_offset_ = -1;
  int T_ = 0;
  std::vector<std::string> names_;
};

}  // namespace splinehmm
