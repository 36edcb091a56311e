#pragma once

namespace wnmax {

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x),
// a > 0, x >= 0. Series expansion below x = a + 1, Lentz continued fraction
// above; both accurate to ~1e-14 relative over the degrees of freedom used
// here (up to a few 10^4).
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

// Upper tail of the chi-square distribution with df degrees of freedom.
double chi2_sf(double x, double df);

// x with chi2_sf(x, df) = alpha, via a Wilson-Hilferty start and safeguarded
// Newton steps.
double chi2_upper_quantile(double alpha, double df);

// Standard normal upper tail and quantiles.
double normal_sf(double z);
double normal_quantile(double p);         // P(Z <= z) = p
double normal_upper_quantile(double alpha);

}  // namespace wnmax
