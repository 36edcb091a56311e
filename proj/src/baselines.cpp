#include "wnmax/baselines.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "wnmax/errors.hpp"
#include "wnmax/stats.hpp"

namespace wnmax {

ChiSquareRef ChiSquareRef::make(double df, Index p,
                                std::optional<bool> force_normal) {
  ChiSquareRef ref;
  ref.df = df;
  ref.use_normal = force_normal ? *force_normal : p > 10;
  return ref;
}

double ChiSquareRef::p_value(double statistic) const {
  if (use_normal) return normal_sf((statistic - df) / std::sqrt(2.0 * df));
  return chi2_sf(statistic, df);
}

double ChiSquareRef::critical_value(double alpha) const {
  if (use_normal) return df + std::sqrt(2.0 * df) * normal_upper_quantile(alpha);
  return chi2_upper_quantile(alpha, df);
}

double portmanteau(const AutocovSet& autocov, PortmanteauVariant variant,
                   Index n) {
  const int max_lag = autocov.max_lag;
  if (max_lag < 1) throw std::invalid_argument("portmanteau needs max_lag >= 1");
  if (n <= max_lag + 1) throw std::invalid_argument("portmanteau needs n > K + 1");

  const Eigen::LLT<Matrix> llt(autocov.sigma[0]);
  if (llt.info() != Eigen::Success)
    throw NumericError("lag-0 covariance is singular");

  double plain = 0.0;
  double weighted = 0.0;
  for (int k = 1; k <= max_lag; ++k) {
    // || L^{-1} S_k L^{-T} ||_F^2 = tr(S_k^T S_0^{-1} S_k S_0^{-1})
    const Matrix half = llt.matrixL().solve(autocov.sigma[k]);
    const double s =
        llt.matrixL().solve(Matrix(half.transpose())).squaredNorm();
    plain += s;
    weighted += s / double(n - k);
  }
  const double p = double(autocov.p());
  switch (variant) {
    case PortmanteauVariant::q1:
      return double(n) * plain;
    case PortmanteauVariant::q2:
      return double(n) * double(n) * weighted;
    case PortmanteauVariant::q3:
      return double(n) * plain +
             p * p * double(max_lag) * double(max_lag + 1) / (2.0 * double(n));
  }
  throw std::invalid_argument("unknown portmanteau variant");
}

namespace {

Method variant_method(PortmanteauVariant variant) {
  switch (variant) {
    case PortmanteauVariant::q1: return Method::q1;
    case PortmanteauVariant::q2: return Method::q2;
    case PortmanteauVariant::q3: return Method::q3;
  }
  return Method::q1;
}

TestResult analytic_result(Method method, double statistic,
                           const ChiSquareRef& ref, double alpha, int lags,
                           Index n, Index p) {
  TestResult result;
  result.method = method;
  result.statistic = statistic;
  result.critical_value = ref.critical_value(alpha);
  result.p_value = ref.p_value(statistic);
  result.alpha = alpha;
  result.lags = lags;
  result.reject = statistic > result.critical_value;
  result.n = n;
  result.p = p;
  return result;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must lie in (0, 1)");
}

}  // namespace

TestResult portmanteau_test(const TimeSeriesPanel& panel,
                            PortmanteauVariant variant, int max_lag,
                            double alpha, const BaselineOptions& options) {
  check_alpha(alpha);
  const TimeSeriesPanel work = options.center ? center(panel) : panel;
  const AutocovSet autocov = sample_autocorr_set(work, max_lag);
  const double stat = portmanteau(autocov, variant, work.n());
  const double df = double(work.p()) * double(work.p()) * double(max_lag);
  const ChiSquareRef ref =
      ChiSquareRef::make(df, work.p(), options.force_normal);
  return analytic_result(variant_method(variant), stat, ref, alpha, max_lag,
                         work.n(), work.p());
}

bool lm_feasible(Index p, int max_lag, Index n) {
  return max_lag >= 1 && p * Index(max_lag) < n - Index(max_lag);
}

std::optional<TestResult> lm_test(const TimeSeriesPanel& panel, int max_lag,
                                  double alpha,
                                  const BaselineOptions& options) {
  check_alpha(alpha);
  if (max_lag < 1) throw std::invalid_argument("lm_test needs max_lag >= 1");
  const Index p = panel.p();
  const Index n = panel.n();
  if (!lm_feasible(p, max_lag, n)) return std::nullopt;

  const TimeSeriesPanel work = options.center ? center(panel) : panel;
  const Index m = n - max_lag;  // regression sample t = K+1..n
  const Index q = 1 + p * max_lag;

  Matrix x(m, q);
  Matrix y(m, p);
  for (Index t = 0; t < m; ++t) {
    const Index global = t + max_lag;
    x(t, 0) = 1.0;
    for (int k = 1; k <= max_lag; ++k)
      x.row(t).segment(1 + Index(k - 1) * p, p) =
          work.values.col(global - k).transpose();
    y.row(t) = work.values.col(global).transpose();
  }

  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  if (qr.rank() < q)
    throw NumericError("lagged design matrix is rank deficient");
  const Matrix coeffs = qr.solve(y);
  const Matrix resid_u = y - x * coeffs;
  const Matrix sigma_u = resid_u.transpose() * resid_u / double(m);

  const Eigen::RowVectorXd ybar = y.colwise().mean();
  const Matrix yc = y.rowwise() - ybar;
  const Matrix sigma_r = yc.transpose() * yc / double(m);

  Eigen::LLT<Matrix> llt(sigma_r);
  if (llt.info() != Eigen::Success)
    throw NumericError("restricted residual covariance is singular");
  const double trace = llt.solve(sigma_u).trace();
  const double stat = double(m) * (double(p) - trace);

  const double df = double(p) * double(p) * double(max_lag);
  const ChiSquareRef ref = ChiSquareRef::make(df, p, options.force_normal);
  return analytic_result(Method::lm, stat, ref, alpha, max_lag, n, p);
}

std::optional<TestResult> tiao_box_test(const TimeSeriesPanel& panel,
                                        double alpha,
                                        const BaselineOptions& options) {
  check_alpha(alpha);
  const Index p = panel.p();
  const Index n = panel.n();
  if (p >= n - 1) return std::nullopt;

  const TimeSeriesPanel work = options.center ? center(panel) : panel;
  const Index m = n - 1;  // common sample t = 2..n

  Matrix x(m, 1 + p);
  Matrix y(m, p);
  for (Index t = 0; t < m; ++t) {
    x(t, 0) = 1.0;
    x.row(t).tail(p) = work.values.col(t).transpose();
    y.row(t) = work.values.col(t + 1).transpose();
  }

  const Eigen::RowVectorXd ybar = y.colwise().mean();
  const Matrix yc = y.rowwise() - ybar;
  const Matrix sigma0 = yc.transpose() * yc / double(m);

  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  if (qr.rank() < 1 + p)
    throw NumericError("lag-1 design matrix is rank deficient");
  const Matrix coeffs = qr.solve(y);
  const Matrix resid = y - x * coeffs;
  const Matrix sigma1 = resid.transpose() * resid / double(m);

  auto log_det = [](const Matrix& s, const char* which) {
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() != Eigen::Success)
      throw NumericError(std::string(which) +
                         " residual covariance is singular");
    return 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
  };
  const double ld0 = log_det(sigma0, "lag-0");
  const double ld1 = log_det(sigma1, "lag-1");

  const double stat = -(double(n) - double(p) - 1.5) * (ld1 - ld0);
  const double df = double(p) * double(p);
  const ChiSquareRef ref = ChiSquareRef::make(df, p, options.force_normal);
  return analytic_result(Method::tiao_box, stat, ref, alpha, /*lags=*/0, n, p);
}

}  // namespace wnmax
