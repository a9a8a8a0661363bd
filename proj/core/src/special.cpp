#include "splinehmm/special.hpp"

#include <cmath>
#include <limits>

#include "splinehmm/errors.hpp"

namespace splinehmm {

namespace {

constexpr double kBesselSeam = 50.0;

// Power series sums for I0 and I1/(x/2); both converge quickly below the seam.
void bessel_series(double x, double& s0, double& s1) {
  const double q = 0.25 * x * x;
  s0 = 1.0;
  s1 = 1.0;
  double t0 = 1.0, t1 = 1.0;
  for (int k = 1; k < 400; ++k) {
    t0 *= q / (static_cast<double>(k) * k);
    t1 *= q / (static_cast<double>(k) * (k + 1.0));
    s0 += t0;
    s1 += t1;
    if (t0 < 1e-17 * s0 && t1 < 1e-17 * s1) break;
  }
}

// Asymptotic sums: I_nu(x) ~ e^x / sqrt(2 pi x) * S_nu with
// S_nu = sum_k t_k, t_0 = 1, t_k = t_{k-1} ((2k-1)^2 - 4 nu^2) / (8 x k).
void bessel_asymptotic(double x, double& s0, double& s1) {
  s0 = 1.0;
  s1 = 1.0;
  double t0 = 1.0, t1 = 1.0;
  for (int k = 1; k <= 8; ++k) {
    const double odd = 2.0 * k - 1.0;
    t0 *= (odd * odd) / (8.0 * x * k);
    t1 *= (odd * odd - 4.0) / (8.0 * x * k);
    s0 += t0;
    s1 += t1;
  }
}

}  // namespace

double log_bessel_i0(double x) {
  x = std::abs(x);
  if (x <= kBesselSeam) {
    double s0, s1;
    bessel_series(x, s0, s1);
    return std::log(s0);
  }
  double s0, s1;
  bessel_asymptotic(x, s0, s1);
  return x - 0.5 * std::log(2.0 * M_PI * x) + std::log(s0);
}

double bessel_i1_over_i0(double x) {
  const double sign = x < 0.0 ? -1.0 : 1.0;
  x = std::abs(x);
  if (x <= kBesselSeam) {
    double s0, s1;
    bessel_series(x, s0, s1);
    return sign * 0.5 * x * s1 / s0;
  }
  double s0, s1;
  bessel_asymptotic(x, s0, s1);
  return sign * s1 / s0;
}

double digamma(double x) {
  if (!(x > 0.0))
    throw DomainError("digamma: requires x > 0");
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Asymptotic expansion, truncation below 1e-13 for x >= 10.
  return acc + std::log(x) - 0.5 * inv -
         inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 -
                 inv2 / 240.0)));
}

}  // namespace splinehmm
