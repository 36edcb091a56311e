#pragma once

#include <cstdint>

#include "wnmax/moments.hpp"
#include "wnmax/types.hpp"

namespace wnmax {

// Quadratic spectral kernel, 1 at the origin. Below |x| = 1e-3 an even Taylor
// expansion replaces the closed form, which loses digits to cancellation.
double qs_kernel(double x);

// Lagged-product panel: row (k, i, j) holds x_{i, t+k} * x_{j, t} for
// t = 1..n_tilde, n_tilde = n - K. Rows are ordered lag-major and, within a
// lag, in column-major pair order (i fastest), matching vec(x_{t+k} x_t^T).
// Rows are produced on demand in blocks; the full p^2 K x n_tilde matrix is
// never required to exist for large p.
class FPanel {
 public:
  FPanel(const Matrix& panel_values /* p x n */, int max_lag);

  Index rows() const { return p_ * p_ * max_lag_; }
  Index cols() const { return n_tilde_; }
  Index p() const { return p_; }
  int max_lag() const { return max_lag_; }

  // Fills out.row(r) with panel row row_begin + r, r = 0..count-1.
  // out must be at least count x n_tilde.
  void fill_rows(Index row_begin, Index count, RowMajorMatrix& out) const;

  // Dense panel, guarded: throws InfeasibleError when rows() > max_rows.
  Matrix materialize(Index max_rows = 5000) const;

  // x_{i, t+lag} * x_{j, t}; lag is 1-based (1..K), t is 0-based.
  double entry(int lag, Index i, Index j, Index t) const;

 private:
  Matrix by_component_;  // n x p, column i = series of component i
  Index p_ = 0;
  Index n_tilde_ = 0;
  int max_lag_ = 0;
};

struct SamplerConfig {
  Index block_rows = 4096;  // panel rows processed per streamed block
  Index batch_draws = 512;  // draws per RNG stream
  double jitter = 1e-10;    // initial Cholesky ridge, escalated x10 on failure
  int max_jitter_retries = 3;
  int threads = 1;          // workers over draw batches
};

// Gaussian multiplier sampler for the null distribution of the maximum
// absolute scaled cross-correlation. One draw correlates a standard normal
// vector through the Cholesky factor of Theta (Theta_{st} = k((s - t)/b)),
// contracts it against the lagged-product panel, rescales by 1/(sd_i sd_j)
// and n_tilde^{-1/2}, and records the sup-norm. The implied coordinate
// covariance is the kernel long-run covariance sandwiched by the
// correlation scaling, without that matrix ever being formed.
class MultiplierSampler {
 public:
  MultiplierSampler(const AutocovSet& autocov, FPanel f_panel, double bandwidth,
                    std::uint64_t seed, SamplerConfig config);

  // Sup-norms |G_b| for b = 1..count. Pure in (state, count): draw b always
  // comes from the stream of its batch, so prefixes agree across calls and
  // across different counts.
  Vector draw_max_abs(Index count) const;

  double bandwidth() const { return bandwidth_; }
  const Matrix& theta_cholesky() const { return theta_chol_; }
  const Vector& scale() const { return scale_; }  // p^2 weights 1/(sd_i sd_j)
  const FPanel& f_panel() const { return f_panel_; }
  std::uint64_t seed() const { return seed_; }
  const SamplerConfig& config() const { return config_; }

 private:
  FPanel f_panel_;
  double bandwidth_ = 0.0;
  Matrix theta_chol_;  // n_tilde x n_tilde lower triangular
  Vector scale_;
  std::uint64_t seed_ = 0;
  SamplerConfig config_;
};

MultiplierSampler build_sampler(const AutocovSet& autocov, FPanel f_panel,
                                double bandwidth, std::uint64_t seed,
                                SamplerConfig config = {});

inline Vector draw_max_abs(const MultiplierSampler& sampler, Index count) {
  return sampler.draw_max_abs(count);
}

// AR(1) plug-in bandwidth 1.3221 (a2 n_tilde)^{1/5}. Per panel row: lag-1
// least squares without intercept on the centered row gives rho (clipped to
// [-0.97, 0.97] before every use), sigma^2 = (1 - rho^2) * mean square of the
// centered row. Returns 0 when every row is serially flat, in which case the
// multiplier covariance degenerates to Theta = I.
double andrews_bandwidth(const FPanel& f_panel);

// The same formula evaluated from per-row AR(1) summaries.
double andrews_bandwidth_from_ar(const Vector& rho, const Vector& sigma2,
                                 Index n_tilde);

// Explicit kernel long-run covariance: sum_j k(j/b) H(j) with
// H(j) = n_tilde^{-1} sum_{t=j+1}^{n_tilde} f_t f_{t-j}^T, negative lags
// evaluated literally. Reference implementation for sampler validation,
// guarded against large panels like materialize().
Matrix oracle_jhat(const FPanel& f_panel, double bandwidth);

// Largest diagonal entry of the implied coordinate covariance; default scale
// input for detection_threshold.
double estimate_varrho(const MultiplierSampler& sampler);

}  // namespace wnmax
