#pragma once

#include <optional>

#include "wnmax/maxcorr.hpp"
#include "wnmax/moments.hpp"
#include "wnmax/panel.hpp"

namespace wnmax {

enum class PortmanteauVariant { q1, q2, q3 };

// Reference distribution of the chi-square family. For large panels the
// exact tail is numerically meaningless, so the statistic is standardized to
// (x - df) / sqrt(2 df) and referred to the normal; the default policy
// switches at p > 10 and can be forced either way.
struct ChiSquareRef {
  double df = 1.0;
  bool use_normal = false;

  static ChiSquareRef make(double df, Index p,
                           std::optional<bool> force_normal = std::nullopt);

  double p_value(double statistic) const;
  double critical_value(double alpha) const;
};

struct BaselineOptions {
  bool center = true;
  std::optional<bool> force_normal;  // overrides the p > 10 policy
};

// Classical multivariate portmanteau statistics. Each lagged autocovariance
// is standardized by the lag-0 covariance, which makes the statistic
// invariant under any nonsingular linear map of the components:
//   t_k = tr(S_k^T S_0^{-1} S_k S_0^{-1})
//   q1: n sum_k t_k
//   q2: n^2 sum_k t_k / (n - k)
//   q3: q1 + p^2 K (K + 1) / (2 n)
// NumericError when S_0 is singular (p >= n, or degenerate data).
double portmanteau(const AutocovSet& autocov, PortmanteauVariant variant,
                   Index n);

TestResult portmanteau_test(const TimeSeriesPanel& panel,
                            PortmanteauVariant variant, int max_lag,
                            double alpha, const BaselineOptions& options = {});

// The LM regression of x_t on K lags needs more observations than
// coefficients: p K < n - K.
bool lm_feasible(Index p, int max_lag, Index n);

// Lagrange multiplier test from the auxiliary regression (with intercept) of
// x_t on x_{t-1}..x_{t-K} over t = K+1..n. nullopt when infeasible.
std::optional<TestResult> lm_test(const TimeSeriesPanel& panel, int max_lag,
                                  double alpha,
                                  const BaselineOptions& options = {});

// Likelihood ratio test of lag order 0 against 1 on the common sample
// t = 2..n, statistic -(n - p - 3/2) log det(S1)/det(S0), p^2 degrees of
// freedom. No lag parameter. nullopt when p >= n - 1; NumericError when a
// residual covariance is singular.
std::optional<TestResult> tiao_box_test(const TimeSeriesPanel& panel,
                                        double alpha,
                                        const BaselineOptions& options = {});

}  // namespace wnmax
