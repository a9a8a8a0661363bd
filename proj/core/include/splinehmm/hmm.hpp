#pragma once

#include <Eigen/Dense>
#include <vector>

#include "splinehmm/errors.hpp"

namespace splinehmm {

// Transition probability matrices along a series.  slices holds one matrix in
// the homogeneous case and T-1 matrices otherwise; step_into(t) is the matrix
// applied between times t-1 and t for t in [2, T].
struct TpmSequence {
  bool homogeneous = true;
  int T = 0;
  std::vector<Eigen::MatrixXd> slices;

  static TpmSequence constant(const Eigen::MatrixXd& gamma, int T);
  static TpmSequence varying(std::vector<Eigen::MatrixXd> gammas, int T);

  const Eigen::MatrixXd& step_into(int t) const {
    return homogeneous ? slices[0] : slices[static_cast<std::size_t>(t) - 2];
  }
  int n_states() const {
    return slices.empty() ? 0 : static_cast<int>(slices[0].rows());
  }
  // Mean transition matrix over steps 2..T.
  Eigen::MatrixXd average() const;
  void validate() const;
};

// T x N matrix of per-state log densities; a row of zeros encodes a missing
// observation (density one).
struct EmissionMatrix {
  Eigen::MatrixXd logp;
  int T() const { return static_cast<int>(logp.rows()); }
  int n_states() const { return static_cast<int>(logp.cols()); }
};

// Row-wise multinomial-logit transition matrix from an N x N predictor matrix
// whose diagonal is fixed at zero (entries on the diagonal are ignored).
Eigen::MatrixXd tpm_multinomial(const Eigen::MatrixXd& eta);

// Stationary distribution of an irreducible transition matrix.
Eigen::VectorXd stationary(const Eigen::MatrixXd& gamma);

// Periodically stationary distributions of an L-cycle of transition matrices;
// returns L x N with row t satisfying row(t) * gamma[(t+1) % L] = row((t+1)%L).
Eigen::MatrixXd periodic_stationary(const std::vector<Eigen::MatrixXd>& cycle);

// Log likelihood via the scaled forward recursion with per-step log shifts.
double forward_loglik(const Eigen::VectorXd& delta, const TpmSequence& tpm,
                      const EmissionMatrix& em);

// Scaled forward/backward pass.  alpha.row(t) and beta.row(t) are the scaled
// vectors, posterior.row(t) the state smoothing probabilities, log_norm[t]
// the per-step log normalizer including the emission shift.
struct ForwardBackward {
  Eigen::MatrixXd alpha;
  Eigen::MatrixXd beta;
  Eigen::MatrixXd posterior;
  Eigen::VectorXd log_norm;
  double loglik = 0.0;
};

ForwardBackward forward_backward(const Eigen::VectorXd& delta,
                                 const TpmSequence& tpm,
                                 const EmissionMatrix& em);

// Most probable state path (0-based); exact ties resolve toward the lower
// state index.
std::vector<int> viterbi(const Eigen::VectorXd& delta, const TpmSequence& tpm,
                         const EmissionMatrix& em);

}  // namespace splinehmm
