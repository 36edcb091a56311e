#include "wnmax/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "wnmax/errors.hpp"

namespace wnmax {

namespace {

constexpr int kMaxIter = 1000000;
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kFpMin = std::numeric_limits<double>::min() / kEps;

// P(a, x) by its power series; reliable for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n <= kMaxIter; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps)
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw NumericError("incomplete gamma series did not converge");
}

// Q(a, x) by a modified Lentz continued fraction; reliable for x >= a + 1.
double gamma_q_cf(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kFpMin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = b + an / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps)
      return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
  }
  throw NumericError("incomplete gamma continued fraction did not converge");
}

double chi2_pdf(double x, double df) {
  if (x <= 0.0) return 0.0;
  const double half = 0.5 * df;
  return std::exp((half - 1.0) * std::log(x) - 0.5 * x - std::lgamma(half) -
                  half * std::log(2.0));
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0)
    throw std::invalid_argument("regularized_gamma_p needs a > 0, x >= 0");
  if (x == 0.0) return 0.0;
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_cf(a, x);
}

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0)
    throw std::invalid_argument("regularized_gamma_q needs a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_cf(a, x);
}

double chi2_sf(double x, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("chi2_sf needs df > 0");
  if (x <= 0.0) return 1.0;
  return regularized_gamma_q(0.5 * df, 0.5 * x);
}

double chi2_upper_quantile(double alpha, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("chi2 quantile needs df > 0");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("chi2 quantile needs alpha in (0, 1)");

  // Wilson-Hilferty start, then Newton kept inside a shrinking bracket.
  const double z = normal_upper_quantile(alpha);
  const double t = 2.0 / (9.0 * df);
  double x = df * std::pow(1.0 - t + z * std::sqrt(t), 3.0);
  if (!(x > 0.0)) x = 0.5 * df;

  double lo = 0.0;
  double hi = x;
  while (chi2_sf(hi, df) > alpha) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw NumericError("chi2 quantile bracket overflow");
  }
  x = std::min(std::max(x, lo + 0.25 * (hi - lo)), hi);

  for (int it = 0; it < 200; ++it) {
    const double f = chi2_sf(x, df) - alpha;
    if (f > 0.0)
      lo = x;
    else
      hi = x;
    const double dfdx = -chi2_pdf(x, df);
    double next = dfdx != 0.0 ? x - f / dfdx : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-13 * std::abs(x)) return next;
    x = next;
  }
  return x;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// Wichura's rational approximations for the normal quantile (3-branch form,
// ~1e-15 absolute accuracy).
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("normal_quantile needs p in (0, 1)");

  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        q * (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                  6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
              1.3314166789178437745e+2) * r + 3.3871328727963666080e+0);
    const double den =
        (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
              3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
            5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
          4.2313330701600911252e+1) * r + 1.0);
    return num / den;
  }

  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
            3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
          4.63033784615654529590e+0) * r + 1.42343711074968357734e+0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
          2.05319162663775882187e+0) * r + 1.0);
    val = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
          5.46378491116411436990e+0) * r + 6.65790464350110377720e+0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
    val = num / den;
  }
  return q < 0.0 ? -val : val;
}

double normal_upper_quantile(double alpha) { return -normal_quantile(alpha); }

}  // namespace wnmax
