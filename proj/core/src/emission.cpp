#include "splinehmm/emission.hpp"

#include <cmath>

#include "splinehmm/errors.hpp"
#include "splinehmm/special.hpp"

namespace splinehmm {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr double kLog2Pi = 1.83787706640934548356;
constexpr double kPi = 3.14159265358979323846;
}  // namespace

double link_apply(Link link, double value) {
  switch (link) {
    case Link::identity:
      return value;
    case Link::log:
      if (!(value > 0.0)) throw DomainError("log link: value must be > 0");
      return std::log(value);
    case Link::logit:
      if (!(value > 0.0 && value < 1.0))
        throw DomainError("logit link: value must be in (0, 1)");
      return std::log(value / (1.0 - value));
  }
  throw ArgumentError("link_apply: unknown link");
}

double link_inverse(Link link, double eta) {
  switch (link) {
    case Link::identity:
      return eta;
    case Link::log:
      return std::exp(eta);
    case Link::logit:
      return 1.0 / (1.0 + std::exp(-eta));
  }
  throw ArgumentError("link_inverse: unknown link");
}

double link_inverse_deriv(Link link, double eta) {
  switch (link) {
    case Link::identity:
      return 1.0;
    case Link::log:
      return std::exp(eta);
    case Link::logit: {
      const double p = 1.0 / (1.0 + std::exp(-eta));
      return p * (1.0 - p);
    }
  }
  throw ArgumentError("link_inverse_deriv: unknown link");
}

int family_n_params(Family f) {
  return f == Family::spline ? 0 : 2;
}

const char* family_name(Family f) {
  switch (f) {
    case Family::gaussian:
      return "gaussian";
    case Family::gamma:
      return "gamma";
    case Family::vonmises:
      return "vonmises";
    case Family::spline:
      return "spline";
  }
  return "?";
}

const char* family_param_name(Family f, int param) {
  switch (f) {
    case Family::gaussian:
    case Family::gamma:
      return param == 0 ? "mean" : "sd";
    case Family::vonmises:
      return param == 0 ? "location" : "concentration";
    case Family::spline:
      break;
  }
  throw ArgumentError("family_param_name: family has no parameters");
}

Link family_default_link(Family f, int param) {
  switch (f) {
    case Family::gaussian:
      return param == 0 ? Link::identity : Link::log;
    case Family::gamma:
      return Link::log;
    case Family::vonmises:
      return param == 0 ? Link::identity : Link::log;
    case Family::spline:
      break;
  }
  throw ArgumentError("family_default_link: family has no parameters");
}

void validate_support(Family f, double x) {
  if (!std::isfinite(x)) throw DomainError("observation is not finite");
  switch (f) {
    case Family::gaussian:
      return;
    case Family::gamma:
      if (!(x > 0.0)) throw DomainError("gamma observations must be > 0");
      return;
    case Family::vonmises:
      if (!(x > -kPi - 1e-9 && x <= kPi + 1e-9))
        throw DomainError("von Mises observations must lie in (-pi, pi]");
      return;
    case Family::spline:
      return;  // checked against the basis domain at model compile time
  }
}

double log_density(Family f, double x, const double* params) {
  switch (f) {
    case Family::gaussian: {
      const double mu = params[0], sigma = params[1];
      if (!(sigma > 0.0) || !std::isfinite(mu) || !std::isfinite(sigma))
        throw DomainError("gaussian: requires finite mean and sd > 0");
      const double z = (x - mu) / sigma;
      return -kHalfLog2Pi - std::log(sigma) - 0.5 * z * z;
    }
    case Family::gamma: {
      const double m = params[0], s = params[1];
      if (!(m > 0.0) || !(s > 0.0) || !std::isfinite(m) || !std::isfinite(s))
        throw DomainError("gamma: requires mean > 0 and sd > 0");
      if (!(x > 0.0)) throw DomainError("gamma: x must be > 0");
      const double shape = m * m / (s * s);
      const double scale = s * s / m;
      return -std::lgamma(shape) - shape * std::log(scale) +
             (shape - 1.0) * std::log(x) - x / scale;
    }
    case Family::vonmises: {
      const double loc = params[0], kappa = params[1];
      if (!(kappa >= 0.0) || !std::isfinite(loc) || !std::isfinite(kappa))
        throw DomainError("vonmises: requires finite location and kappa >= 0");
      return kappa * std::cos(x - loc) - kLog2Pi - log_bessel_i0(kappa);
    }
    case Family::spline:
      break;
  }
  throw ArgumentError("log_density: spline density is evaluated via its basis");
}

void log_density_grad(Family f, double x, const double* params, double* grad) {
  switch (f) {
    case Family::gaussian: {
      const double mu = params[0], sigma = params[1];
      const double z = (x - mu) / sigma;
      grad[0] = z / sigma;
      grad[1] = (z * z - 1.0) / sigma;
      return;
    }
    case Family::gamma: {
      const double m = params[0], s = params[1];
      const double shape = m * m / (s * s);
      const double scale = s * s / m;
      const double d_shape = -digamma(shape) - std::log(scale) + std::log(x);
      const double d_scale = -shape / scale + x / (scale * scale);
      grad[0] = d_shape * (2.0 * m / (s * s)) + d_scale * (-(s * s) / (m * m));
      grad[1] = d_shape * (-2.0 * m * m / (s * s * s)) +
                d_scale * (2.0 * s / m);
      return;
    }
    case Family::vonmises: {
      const double loc = params[0], kappa = params[1];
      grad[0] = kappa * std::sin(x - loc);
      grad[1] = std::cos(x - loc) - bessel_i1_over_i0(kappa);
      return;
    }
    case Family::spline:
      break;
  }
  throw ArgumentError("log_density_grad: spline density has no scalar params");
}

SplineDensity make_spline_density(const BasisConfig& config, PenaltyKind kind,
                                  double eps) {
  if (config.constraint != Constraint::drop_first_coef)
    throw ConfigError("spline density: constraint must be drop_first_coef");
  SplineDensity d;
  d.term = make_smooth_term(config, kind, eps);
  d.norm_consts = basis_integrals(config);
  return d;
}

Eigen::VectorXd spline_weights(const Eigen::VectorXd& b) {
  const int kf = static_cast<int>(b.size()) + 1;
  Eigen::VectorXd alpha(kf);
  double mx = 0.0;  // the pinned first coefficient
  for (int k = 1; k < kf; ++k) mx = std::max(mx, b[k - 1]);
  alpha[0] = std::exp(-mx);
  double sum = alpha[0];
  for (int k = 1; k < kf; ++k) {
    alpha[k] = std::exp(b[k - 1] - mx);
    sum += alpha[k];
  }
  alpha /= sum;
  return alpha;
}

Eigen::VectorXd predictor_eval(double intercept,
                               const std::vector<const Eigen::MatrixXd*>& designs,
                               const std::vector<Eigen::VectorXd>& coefs,
                               int n_rows) {
  if (designs.size() != coefs.size())
    throw ArgumentError("predictor_eval: designs/coefs size mismatch");
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(n_rows, intercept);
  for (std::size_t q = 0; q < designs.size(); ++q) {
    if (designs[q]->rows() != n_rows ||
        designs[q]->cols() != coefs[q].size())
      throw ArgumentError("predictor_eval: design shape mismatch");
    eta.noalias() += (*designs[q]) * coefs[q];
  }
  return eta;
}

}  // namespace splinehmm
