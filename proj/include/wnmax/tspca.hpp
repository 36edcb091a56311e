#pragma once

#include <string>

#include "wnmax/panel.hpp"
#include "wnmax/types.hpp"

namespace wnmax {

// Invertible linear map applied columnwise before testing. The series is
// first prewhitened by the inverse symmetric square root of its lag-0
// covariance, then rotated by the eigenvectors (descending eigenvalue order)
// of sum_{k=0..k0} C_k C_k^T of the whitened series, where the lagged C_k
// are hard-thresholded at 1.5 sqrt(log(p)/n) so that the rotation tracks
// real serial correlation rather than the p^2 k0 sampling-noise terms that
// dominate the raw aggregate once p is large against n. The result has
// identity contemporaneous covariance and its serial correlation
// concentrated into few components instead of smeared across the panel.
struct LinearTransform {
  Matrix q;            // p x p
  int lag_horizon = 0;  // k0: autocovariance lags 0..k0 enter the aggregate
};

// Requires n > lag_horizon + 1. Throws DegenerateComponentError when a
// component has zero variance and NumericError when the map would be
// numerically singular. Eigenvectors are sign-fixed so that the first
// coordinate of nonnegligible magnitude is positive.
LinearTransform fit_transform(const TimeSeriesPanel& panel, int lag_horizon = 5);

// y_t = q x_t columnwise; preserves the centered flag.
TimeSeriesPanel apply(const LinearTransform& transform,
                      const TimeSeriesPanel& panel);

// One CSV row per matrix row, full precision; lag_horizon on a header line.
void save_csv(const LinearTransform& transform, const std::string& path);
LinearTransform load_transform_csv(const std::string& path);

}  // namespace wnmax
