#include "wnmax/moments.hpp"

#include <stdexcept>
#include <string>

#include "wnmax/errors.hpp"

namespace wnmax {

Matrix sample_autocov(const TimeSeriesPanel& panel, int lag) {
  const Index n = panel.n();
  if (lag < 0 || lag > n - 2)
    throw std::invalid_argument("lag must lie in [0, n - 2], got " +
                                std::to_string(lag));
  const Index m = n - lag;
  const auto& x = panel.values;
  return (x.rightCols(m) * x.leftCols(m).transpose()) / double(n);
}

AutocovSet sample_autocorr_set(const TimeSeriesPanel& panel, int max_lag) {
  const Index n = panel.n();
  if (max_lag < 0 || max_lag > n - 2)
    throw std::invalid_argument("max_lag must lie in [0, n - 2], got " +
                                std::to_string(max_lag));

  AutocovSet set;
  set.max_lag = max_lag;
  set.n_obs = n;
  set.sigma.reserve(max_lag + 1);
  for (int k = 0; k <= max_lag; ++k)
    set.sigma.push_back(sample_autocov(panel, k));

  set.sd = set.sigma[0].diagonal().cwiseSqrt();
  for (Index i = 0; i < set.sd.size(); ++i)
    if (!(set.sd[i] > 0.0))
      throw DegenerateComponentError(
          "component " + std::to_string(i) + " has zero sample variance", i);

  Vector inv_sd = set.sd.cwiseInverse();
  set.gamma.reserve(max_lag + 1);
  for (int k = 0; k <= max_lag; ++k)
    set.gamma.push_back(inv_sd.asDiagonal() * set.sigma[k] *
                        inv_sd.asDiagonal());
  return set;
}

}  // namespace wnmax
