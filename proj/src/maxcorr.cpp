#include "wnmax/maxcorr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

#include "wnmax/errors.hpp"
#include "wnmax/tspca.hpp"

namespace wnmax {

const char* method_name(Method method) {
  switch (method) {
    case Method::maxcorr: return "maxcorr";
    case Method::maxcorr_tspca: return "maxcorr_tspca";
    case Method::q1: return "q1";
    case Method::q2: return "q2";
    case Method::q3: return "q3";
    case Method::lm: return "lm";
    case Method::tiao_box: return "tb";
  }
  return "?";
}

std::optional<Method> method_from_name(std::string_view name) {
  if (name == "maxcorr") return Method::maxcorr;
  if (name == "maxcorr_tspca" || name == "tspca") return Method::maxcorr_tspca;
  if (name == "q1") return Method::q1;
  if (name == "q2") return Method::q2;
  if (name == "q3") return Method::q3;
  if (name == "lm") return Method::lm;
  if (name == "tb" || name == "tiao_box") return Method::tiao_box;
  return std::nullopt;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

const char* TestResult::csv_header() {
  return "method,statistic,critical_value,p_value,alpha,K,B,reject,seed,n,p,"
         "residual_based";
}

void TestResult::write_csv_row(std::ostream& out) const {
  out << method_name(method) << ',' << fmt(statistic) << ','
      << fmt(critical_value) << ',' << fmt(p_value) << ',' << fmt(alpha) << ','
      << lags << ',' << draws << ',' << (reject ? 1 : 0) << ',' << seed << ','
      << n << ',' << p << ',' << (residual_based ? 1 : 0) << '\n';
}

void TestResult::write_kv(std::ostream& out) const {
  out << "method=" << method_name(method) << '\n'
      << "statistic=" << fmt(statistic) << '\n'
      << "critical_value=" << fmt(critical_value) << '\n'
      << "p_value=" << fmt(p_value) << '\n'
      << "alpha=" << fmt(alpha) << '\n'
      << "K=" << lags << '\n'
      << "B=" << draws << '\n'
      << "reject=" << (reject ? 1 : 0) << '\n'
      << "seed=" << seed << '\n'
      << "n=" << n << '\n'
      << "p=" << p << '\n'
      << "residual_based=" << (residual_based ? 1 : 0) << '\n';
}

double tn_statistic(const AutocovSet& autocov) {
  if (autocov.max_lag < 1)
    throw std::invalid_argument("tn_statistic needs max_lag >= 1");
  double best = 0.0;
  for (int k = 1; k <= autocov.max_lag; ++k)
    best = std::max(best, autocov.gamma[k].cwiseAbs().maxCoeff());
  return std::sqrt(double(autocov.n_obs)) * best;
}

double critical_value(const Vector& max_abs_draws, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must lie in (0, 1)");
  const Index b = max_abs_draws.size();
  const Index m = Index(std::floor(alpha * double(b) + 1e-9));
  if (m < 1)
    throw std::invalid_argument(
        "floor(B alpha) < 1: too few draws to form the critical value");
  std::vector<double> v(max_abs_draws.data(), max_abs_draws.data() + b);
  std::nth_element(v.begin(), v.begin() + (m - 1), v.end(),
                   std::greater<double>());
  return v[m - 1];
}

TestResult run_maxcorr_test(const TimeSeriesPanel& panel, int max_lag,
                            double alpha, Index n_draws, std::uint64_t seed,
                            bool pretransform, const MaxCorrOptions& options) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must lie in (0, 1)");
  if (n_draws < 1) throw std::invalid_argument("need at least one draw");

  TimeSeriesPanel work = options.center ? center(panel) : panel;
  if (pretransform) {
    const LinearTransform transform = fit_transform(work, options.tspca_lags);
    work = apply(transform, work);
  }

  const AutocovSet autocov = sample_autocorr_set(work, max_lag);
  const double tn = tn_statistic(autocov);

  FPanel f_panel(work.values, max_lag);
  const double bw =
      options.bandwidth ? *options.bandwidth : andrews_bandwidth(f_panel);
  const MultiplierSampler sampler =
      build_sampler(autocov, std::move(f_panel), bw, seed, options.sampler);
  const Vector draws = sampler.draw_max_abs(n_draws);

  TestResult result;
  result.method = pretransform ? Method::maxcorr_tspca : Method::maxcorr;
  result.statistic = tn;
  result.critical_value = critical_value(draws, alpha);
  result.p_value = double((draws.array() >= tn).count()) / double(n_draws);
  result.alpha = alpha;
  result.lags = max_lag;
  result.draws = n_draws;
  result.reject = tn > result.critical_value;
  result.seed = seed;
  result.n = panel.n();
  result.p = panel.p();
  return result;
}

double detection_threshold(Index n, Index p, int max_lag, double alpha,
                           double varrho) {
  if (n < 1 || p < 1 || max_lag < 1)
    throw std::invalid_argument("detection_threshold needs n, p, K >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must lie in (0, 1)");
  if (!(varrho >= 0.0))
    throw std::invalid_argument("varrho must be nonnegative");
  const double lambda = std::sqrt(2.0 * std::log(double(p) * double(p) *
                                                 double(max_lag))) +
                        std::sqrt(2.0 * std::log(1.0 / alpha));
  return std::sqrt(varrho / double(n)) * lambda;
}

}  // namespace wnmax
