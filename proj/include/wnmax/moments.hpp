#pragma once

#include <vector>

#include "wnmax/panel.hpp"
#include "wnmax/types.hpp"

namespace wnmax {

// Sample autocovariances and autocorrelations at lags 0..max_lag. All
// cross-products use divisor n regardless of the lag.
struct AutocovSet {
  int max_lag = 0;            // K
  Index n_obs = 0;            // n
  std::vector<Matrix> sigma;  // sigma[k], k = 0..K, each p x p
  std::vector<Matrix> gamma;  // gamma[k] = D^{-1/2} sigma[k] D^{-1/2}
  Vector sd;                  // sqrt(sigma[0](i, i))

  Index p() const { return sd.size(); }
};

// (1/n) sum_{t=1}^{n-k} x_{t+k} x_t^T. Requires 0 <= lag <= n - 2.
Matrix sample_autocov(const TimeSeriesPanel& panel, int lag);

// Autocovariances and autocorrelations for lags 0..max_lag. Throws
// DegenerateComponentError if some component has zero sample variance.
AutocovSet sample_autocorr_set(const TimeSeriesPanel& panel, int max_lag);

}  // namespace wnmax
