#include "wnmax/diagnostics.hpp"

#include <stdexcept>
#include <string>

#include "wnmax/baselines.hpp"
#include "wnmax/errors.hpp"

namespace wnmax {

FittedModel fit_var(const TimeSeriesPanel& panel, int order) {
  if (order < 0) throw std::invalid_argument("order must be nonnegative");
  const Index p = panel.p();
  const Index n = panel.n();
  if (p * Index(order + 1) >= n)
    throw InfeasibleError("fit_var needs p (order + 1) < n, got p = " +
                          std::to_string(p) + ", order = " +
                          std::to_string(order) + ", n = " + std::to_string(n));

  FittedModel model;
  model.order = order;

  if (order == 0) {
    // Centering and an intercept-only fit are the same arithmetic; going
    // through center() keeps the residuals bit-identical to it.
    model.intercept = panel.centered ? Vector::Zero(p).eval()
                                     : panel.values.rowwise().mean().eval();
    model.residuals = center(panel);
    return model;
  }

  const Index m = n - order;
  const Index q = 1 + p * order;
  Matrix x(m, q);
  Matrix y(m, p);
  for (Index t = 0; t < m; ++t) {
    const Index global = t + order;
    x(t, 0) = 1.0;
    for (int k = 1; k <= order; ++k)
      x.row(t).segment(1 + Index(k - 1) * p, p) =
          panel.values.col(global - k).transpose();
    y.row(t) = panel.values.col(global).transpose();
  }

  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  if (qr.rank() < q)
    throw NumericError("autoregression design matrix is rank deficient");
  const Matrix coeffs = qr.solve(y);  // q x p

  model.intercept = coeffs.row(0).transpose();
  model.coeffs.reserve(order);
  for (int k = 1; k <= order; ++k)
    model.coeffs.push_back(
        coeffs.middleRows(1 + Index(k - 1) * p, p).transpose());

  Matrix resid(p, m);
  for (Index t = 0; t < m; ++t) {
    const Index global = t + order;
    Vector r = panel.values.col(global) - model.intercept;
    for (int k = 1; k <= order; ++k)
      r.noalias() -= model.coeffs[k - 1] * panel.values.col(global - k);
    resid.col(t) = r;
  }
  model.residuals = TimeSeriesPanel{std::move(resid), true};
  return model;
}

TestResult test_residuals(const FittedModel& model, Method method, int max_lag,
                          const ResidualTestOptions& options) {
  const TimeSeriesPanel& resid = model.residuals;
  TestResult result;
  switch (method) {
    case Method::maxcorr:
    case Method::maxcorr_tspca:
      result = run_maxcorr_test(resid, max_lag, options.alpha, options.n_draws,
                                options.seed, method == Method::maxcorr_tspca,
                                options.maxcorr);
      break;
    case Method::q1:
    case Method::q2:
    case Method::q3: {
      const PortmanteauVariant variant =
          method == Method::q1   ? PortmanteauVariant::q1
          : method == Method::q2 ? PortmanteauVariant::q2
                                 : PortmanteauVariant::q3;
      result = portmanteau_test(
          resid, variant, max_lag, options.alpha,
          {options.maxcorr.center, options.force_normal});
      break;
    }
    case Method::lm: {
      auto r = lm_test(resid, max_lag, options.alpha,
                       {options.maxcorr.center, options.force_normal});
      if (!r)
        throw InfeasibleError("LM test infeasible on the residual panel");
      result = *r;
      break;
    }
    case Method::tiao_box: {
      auto r = tiao_box_test(resid, options.alpha,
                             {options.maxcorr.center, options.force_normal});
      if (!r)
        throw InfeasibleError(
            "lag-order test infeasible on the residual panel");
      result = *r;
      break;
    }
  }
  result.residual_based = true;
  return result;
}

}  // namespace wnmax
