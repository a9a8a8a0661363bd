#pragma once

namespace splinehmm {

// log of the modified Bessel function I0; series below the seam, asymptotic
// expansion above, relative accuracy around 1e-12 on both sides.
double log_bessel_i0(double x);

// I1(x)/I0(x), the derivative of log_bessel_i0; same series/asymptotic split.
double bessel_i1_over_i0(double x);

// Digamma function via recurrence into the asymptotic region.
double digamma(double x);

}  // namespace splinehmm
