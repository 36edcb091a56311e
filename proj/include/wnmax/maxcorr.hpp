#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>

#include "wnmax/lrcov.hpp"
#include "wnmax/moments.hpp"
#include "wnmax/panel.hpp"

namespace wnmax {

enum class Method {
  maxcorr,        // max absolute scaled cross-correlation, multiplier critical value
  maxcorr_tspca,  // same statistic after the decorrelating pre-transform
  q1,             // portmanteau, plain
  q2,             // portmanteau, lag-weighted
  q3,             // portmanteau, mean-corrected
  lm,             // Lagrange multiplier regression test
  tiao_box,       // lag 0 vs lag 1 likelihood ratio
};

const char* method_name(Method method);
std::optional<Method> method_from_name(std::string_view name);

struct TestResult {
  Method method = Method::maxcorr;
  double statistic = 0.0;
  double critical_value = 0.0;
  double p_value = 1.0;
  double alpha = 0.05;
  int lags = 0;            // K; 0 for the lag-free likelihood ratio test
  Index draws = 0;         // B; 0 when the reference is analytic
  bool reject = false;
  std::uint64_t seed = 0;  // 0 when the reference is analytic
  Index n = 0;
  Index p = 0;
  bool residual_based = false;

  void write_kv(std::ostream& out) const;
  void write_csv_row(std::ostream& out) const;
  static const char* csv_header();
};

// sqrt(n) max_{1<=k<=K} max_{i,j} |gamma_k(i, j)|; lag 0 excluded.
// Requires max_lag >= 1.
double tn_statistic(const AutocovSet& autocov);

// floor(B alpha)-th largest draw; throws std::invalid_argument when
// floor(B alpha) < 1. The product gets a 1e-9 nudge so that values one ulp
// below an exact integer do not shift the order statistic.
double critical_value(const Vector& max_abs_draws, double alpha);

struct MaxCorrOptions {
  bool center = true;
  std::optional<double> bandwidth;  // Andrews plug-in when unset
  int tspca_lags = 5;               // lag horizon of the pre-transform
  SamplerConfig sampler;
};

// Full pipeline: center, optional pre-transform, statistic, bandwidth,
// multiplier draws, critical value and p-value. Rejects iff the statistic
// strictly exceeds the critical value, which matches p_value < floor(B a)/B.
TestResult run_maxcorr_test(const TimeSeriesPanel& panel, int max_lag,
                            double alpha, Index n_draws, std::uint64_t seed,
                            bool pretransform = false,
                            const MaxCorrOptions& options = {});

// sqrt(varrho/n) ({2 log(p^2 K)}^{1/2} + {2 log(1/alpha)}^{1/2}): the
// smallest maximum cross-correlation magnitude the level-alpha test is
// guaranteed to pick up asymptotically.
double detection_threshold(Index n, Index p, int max_lag, double alpha,
                           double varrho);

}  // namespace wnmax
