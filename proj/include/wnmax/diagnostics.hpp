#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "wnmax/maxcorr.hpp"
#include "wnmax/panel.hpp"

namespace wnmax {

// Least-squares vector autoregression with intercept, kept around for
// white-noise diagnosis of its residuals. Order 0 reduces to centering.
struct FittedModel {
  int order = 0;               // r
  std::vector<Matrix> coeffs;  // A_1..A_r, each p x p
  Vector intercept;            // p
  TimeSeriesPanel residuals;   // p x (n - r), flagged centered
};

// Requires p (order + 1) < n (else InfeasibleError); rank-deficient designs
// raise NumericError. Residuals are x_t - intercept - sum_j A_j x_{t-j} over
// t = order+1..n, recomputed from the coefficients.
FittedModel fit_var(const TimeSeriesPanel& panel, int order);

struct ResidualTestOptions {
  double alpha = 0.05;
  Index n_draws = 2000;
  std::uint64_t seed = 0;
  MaxCorrOptions maxcorr;            // bandwidth / sampler / pre-transform knobs
  std::optional<bool> force_normal;  // chi-square family policy override
};

// Runs any of the tests on the model residuals; the result is annotated as
// residual-based. Infeasible analytic baselines raise InfeasibleError.
TestResult test_residuals(const FittedModel& model, Method method, int max_lag,
                          const ResidualTestOptions& options = {});

}  // namespace wnmax
