#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "splinehmm/basis.hpp"

namespace splinehmm {

enum class Family { gaussian, gamma, vonmises, spline };

enum class Link { identity, log, logit };

double link_apply(Link link, double value);
double link_inverse(Link link, double eta);
// d link_inverse / d eta
double link_inverse_deriv(Link link, double eta);

// Number of scalar parameters of a parametric family (0 for spline).
int family_n_params(Family f);
const char* family_name(Family f);
// Parameter names on the user scale: gaussian mean/sd, gamma mean/sd,
// von Mises location/concentration.
const char* family_param_name(Family f, int param);
Link family_default_link(Family f, int param);

// Observation support check; throws DomainError when x is unusable.
void validate_support(Family f, double x);

// Log density with natural-scale parameters (gamma takes mean and sd and is
// converted to shape/scale internally).  Throws DomainError on invalid
// parameters or observations outside the support.
double log_density(Family f, double x, const double* params);

// Gradient of log_density with respect to the natural-scale parameters.
void log_density_grad(Family f, double x, const double* params, double* grad);

// Nonparametric state density: f(x) = sum_k alpha_k B_k(x) / c_k with
// alpha = softmax(0, b) over the full basis and c_k the exact basis
// integrals, so f integrates to one by construction.
struct SplineDensity {
  SmoothTerm term;              // constraint = drop_first_coef
  Eigen::VectorXd norm_consts;  // integrals of the num_basis() functions
};

SplineDensity make_spline_density(const BasisConfig& config, PenaltyKind kind,
                                  double eps = 1e-10);

// softmax(0, b): weight vector of length b.size() + 1 summing to one.
Eigen::VectorXd spline_weights(const Eigen::VectorXd& b);

// Additive predictor: eta_t = intercept + sum_q design_q.row(t) * coef_q.
struct PredictorSpec {
  int intercept_index = -1;      // position in the parameter vector
  std::vector<int> smooth_ids;   // penalized blocks feeding this predictor
  Link link = Link::identity;
};

Eigen::VectorXd predictor_eval(double intercept,
                               const std::vector<const Eigen::MatrixXd*>& designs,
                               const std::vector<Eigen::VectorXd>& coefs,
                               int n_rows);

}  // namespace splinehmm
