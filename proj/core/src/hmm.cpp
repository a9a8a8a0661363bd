#include "splinehmm/hmm.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace splinehmm {

namespace {

void validate_tpm_matrix(const Eigen::MatrixXd& g, const char* where) {
  if (g.rows() != g.cols() || g.rows() < 1)
    throw ArgumentError(std::string(where) + ": matrix must be square");
  if (!g.allFinite())
    throw NumericalError(std::string(where) + ": non-finite entries");
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    if (g.row(i).minCoeff() < -1e-12)
      throw ArgumentError(std::string(where) + ": negative probability");
    if (std::abs(g.row(i).sum() - 1.0) > 1e-10)
      throw ArgumentError(std::string(where) + ": row does not sum to one");
  }
}

// All-states reachability of the embedded graph.
bool irreducible(const Eigen::MatrixXd& g) {
  const int n = static_cast<int>(g.rows());
  if (n == 1) return true;
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(n, n) + (g.array() > 0.0)
                          .cast<double>().matrix();
  Eigen::MatrixXd acc = b;
  for (int k = 1; k < n - 1; ++k) {
    acc = acc * b;
    acc = (acc.array() > 0.0).cast<double>();  // keep entries bounded
  }
  return acc.minCoeff() > 0.0;
}

Eigen::VectorXd stationary_of(const Eigen::MatrixXd& g, const char* where) {
  const int n = static_cast<int>(g.rows());
  if (n == 1) return Eigen::VectorXd::Ones(1);
  if (!irreducible(g))
    throw ModelError(std::string(where) +
                     ": chain is reducible; consider a fixed uniform initial "
                     "distribution");
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) - g.transpose();
  m.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[n - 1] = 1.0;
  Eigen::VectorXd delta = m.partialPivLu().solve(rhs);
  if (!delta.allFinite())
    throw NumericalError(std::string(where) + ": stationary solve failed");
  if (delta.minCoeff() < -1e-9)
    throw NumericalError(std::string(where) +
                         ": stationary solve produced negative mass");
  delta = delta.cwiseMax(0.0);
  delta /= delta.sum();
  return delta;
}

}  // namespace

TpmSequence TpmSequence::constant(const Eigen::MatrixXd& gamma, int T) {
  TpmSequence seq;
  seq.homogeneous = true;
  seq.T = T;
  seq.slices.push_back(gamma);
  seq.validate();
  return seq;
}

TpmSequence TpmSequence::varying(std::vector<Eigen::MatrixXd> gammas, int T) {
  TpmSequence seq;
  seq.homogeneous = false;
  seq.T = T;
  seq.slices = std::move(gammas);
  seq.validate();
  return seq;
}

Eigen::MatrixXd TpmSequence::average() const {
  if (homogeneous) return slices[0];
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(slices[0].rows(),
                                              slices[0].cols());
  for (const auto& g : slices) acc += g;
  return acc / static_cast<double>(slices.size());
}

void TpmSequence::validate() const {
  if (T < 1) throw ArgumentError("TpmSequence: T must be >= 1");
  if (homogeneous) {
    if (slices.size() != 1)
      throw ArgumentError("TpmSequence: homogeneous needs exactly one slice");
  } else {
    if (T < 2 || slices.size() != static_cast<std::size_t>(T - 1))
      throw ArgumentError("TpmSequence: need T-1 slices for a varying chain");
  }
  const Eigen::Index n = slices[0].rows();
  for (const auto& g : slices) {
    if (g.rows() != n)
      throw ArgumentError("TpmSequence: inconsistent state counts");
    validate_tpm_matrix(g, "TpmSequence");
  }
}

Eigen::MatrixXd tpm_multinomial(const Eigen::MatrixXd& eta) {
  if (eta.rows() != eta.cols())
    throw ArgumentError("tpm_multinomial: eta must be square");
  const int n = static_cast<int>(eta.rows());
  Eigen::MatrixXd gamma(n, n);
  for (int i = 0; i < n; ++i) {
    double mx = 0.0;  // diagonal predictor is fixed at zero
    for (int j = 0; j < n; ++j)
      if (j != i) mx = std::max(mx, eta(i, j));
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      const double e = std::exp((j == i ? 0.0 : eta(i, j)) - mx);
      gamma(i, j) = e;
      sum += e;
    }
    if (!(sum > 0.0) || !std::isfinite(sum))
      throw NumericalError("tpm_multinomial: row normalizer not finite");
    gamma.row(i) /= sum;
  }
  return gamma;
}

Eigen::VectorXd stationary(const Eigen::MatrixXd& gamma) {
  validate_tpm_matrix(gamma, "stationary");
  return stationary_of(gamma, "stationary");
}

Eigen::MatrixXd periodic_stationary(const std::vector<Eigen::MatrixXd>& cycle) {
  const int L = static_cast<int>(cycle.size());
  if (L < 1) throw ArgumentError("periodic_stationary: empty cycle");
  for (const auto& g : cycle) validate_tpm_matrix(g, "periodic_stationary");
  const int n = static_cast<int>(cycle[0].rows());
  for (const auto& g : cycle)
    if (g.rows() != n)
      throw ArgumentError("periodic_stationary: inconsistent state counts");
  // Cycle product starting after phase 0: G[1] G[2] ... G[L-1] G[0].
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n);
  for (int s = 1; s <= L; ++s) q = q * cycle[s % L];
  Eigen::MatrixXd out(L, n);
  Eigen::VectorXd d = stationary_of(q, "periodic_stationary");
  out.row(0) = d.transpose();
  for (int t = 1; t < L; ++t) {
    d = (d.transpose() * cycle[t % L]).transpose();
    out.row(t) = d.transpose();
  }
  return out;
}

double forward_loglik(const Eigen::VectorXd& delta, const TpmSequence& tpm,
                      const EmissionMatrix& em) {
  tpm.validate();
  const int T = em.T();
  const int n = em.n_states();
  if (tpm.n_states() != n || tpm.T != T)
    throw ArgumentError("forward_loglik: dimension mismatch");
  if (delta.size() != n || std::abs(delta.sum() - 1.0) > 1e-8 ||
      delta.minCoeff() < -1e-12)
    throw ArgumentError("forward_loglik: delta is not a distribution");
  if (!em.logp.allFinite())
    throw NumericalError("forward_loglik: non-finite log density");

  double loglik = 0.0;
  Eigen::VectorXd phi(n), prob(n);
  for (int t = 0; t < T; ++t) {
    const double shift = em.logp.row(t).maxCoeff();
    prob = (em.logp.row(t).transpose().array() - shift).exp();
    Eigen::VectorXd v = (t == 0)
        ? (delta.array() * prob.array()).matrix().eval()
        : ((tpm.step_into(t + 1).transpose() * phi).array() * prob.array())
              .matrix().eval();
    const double c = v.sum();
    if (!(c > 0.0) || !std::isfinite(c))
      throw NumericalError(
          "forward_loglik: forward vector vanished at t = " +
          std::to_string(t + 1));
    phi = v / c;
    loglik += std::log(c) + shift;
  }
  return loglik;
}

ForwardBackward forward_backward(const Eigen::VectorXd& delta,
                                 const TpmSequence& tpm,
                                 const EmissionMatrix& em) {
  tpm.validate();
  const int T = em.T();
  const int n = em.n_states();
  if (tpm.n_states() != n || tpm.T != T)
    throw ArgumentError("forward_backward: dimension mismatch");
  if (delta.size() != n || std::abs(delta.sum() - 1.0) > 1e-8 ||
      delta.minCoeff() < -1e-12)
    throw ArgumentError("forward_backward: delta is not a distribution");

  ForwardBackward fb;
  fb.alpha.resize(T, n);
  fb.beta.resize(T, n);
  fb.posterior.resize(T, n);
  fb.log_norm.resize(T);

  // Shifted densities p~(t, i) = exp(logp - rowmax) reused by both passes.
  Eigen::MatrixXd prob(T, n);
  Eigen::VectorXd scale(T);  // c~ per step
  for (int t = 0; t < T; ++t) {
    const double shift = em.logp.row(t).maxCoeff();
    prob.row(t) = (em.logp.row(t).array() - shift).exp();
    Eigen::VectorXd v = (t == 0)
        ? (delta.array() * prob.row(0).transpose().array()).matrix().eval()
        : ((tpm.step_into(t + 1).transpose() *
            fb.alpha.row(t - 1).transpose()).array() *
           prob.row(t).transpose().array()).matrix().eval();
    const double c = v.sum();
    if (!(c > 0.0) || !std::isfinite(c))
      throw NumericalError(
          "forward_backward: forward vector vanished at t = " +
          std::to_string(t + 1));
    scale[t] = c;
    fb.alpha.row(t) = (v / c).transpose();
    fb.log_norm[t] = std::log(c) + shift;
  }
  fb.loglik = fb.log_norm.sum();

  fb.beta.row(T - 1).setOnes();
  for (int t = T - 2; t >= 0; --t) {
    const Eigen::VectorXd w =
        (prob.row(t + 1).transpose().array() *
         fb.beta.row(t + 1).transpose().array()).matrix();
    fb.beta.row(t) = (tpm.step_into(t + 2) * w).transpose() / scale[t + 1];
  }
  fb.posterior = fb.alpha.cwiseProduct(fb.beta);
  // Guard against drift: each row should already sum to one.
  for (int t = 0; t < T; ++t) {
    const double s = fb.posterior.row(t).sum();
    if (!(s > 0.0) || !std::isfinite(s))
      throw NumericalError("forward_backward: posterior degenerate at t = " +
                           std::to_string(t + 1));
    fb.posterior.row(t) /= s;
  }
  return fb;
}

std::vector<int> viterbi(const Eigen::VectorXd& delta, const TpmSequence& tpm,
                         const EmissionMatrix& em) {
  tpm.validate();
  const int T = em.T();
  const int n = em.n_states();
  if (tpm.n_states() != n || tpm.T != T)
    throw ArgumentError("viterbi: dimension mismatch");
  if (delta.size() != n || std::abs(delta.sum() - 1.0) > 1e-8 ||
      delta.minCoeff() < -1e-12)
    throw ArgumentError("viterbi: delta is not a distribution");

  const double neg_inf = -std::numeric_limits<double>::infinity();
  Eigen::MatrixXd score(T, n);
  Eigen::MatrixXi back(T, n);
  for (int i = 0; i < n; ++i)
    score(0, i) = (delta[i] > 0.0 ? std::log(delta[i]) : neg_inf) +
                  em.logp(0, i);
  for (int t = 1; t < T; ++t) {
    const Eigen::MatrixXd& g = tpm.step_into(t + 1);
    for (int j = 0; j < n; ++j) {
      double best = neg_inf;
      int arg = 0;
      for (int i = 0; i < n; ++i) {
        const double cand =
            score(t - 1, i) + (g(i, j) > 0.0 ? std::log(g(i, j)) : neg_inf);
        if (cand > best) {  // ties keep the lower previous index
          best = cand;
          arg = i;
        }
      }
      score(t, j) = best + em.logp(t, j);
      back(t, j) = arg;
    }
  }
  int arg = 0;
  double best = neg_inf;
  for (int j = 0; j < n; ++j)
    if (score(T - 1, j) > best) {
      best = score(T - 1, j);
      arg = j;
    }
  if (best == neg_inf)
    throw NumericalError("viterbi: no path with positive probability");
  std::vector<int> path(T);
  path[T - 1] = arg;
  for (int t = T - 1; t > 0; --t) path[t - 1] = back(t, path[t]);
  return path;
}

}  // namespace splinehmm
