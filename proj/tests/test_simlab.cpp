#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "doctest.h"
#include "wnmax/errors.hpp"
#include "wnmax/moments.hpp"
#include "wnmax/panel.hpp"
#include "wnmax/rng.hpp"
#include "wnmax/simlab.hpp"

using namespace wnmax;

namespace {

SimConfig tiny_config() {
  SimConfig config;
  config.model = SimModel::m1;
  config.noise = NoiseKind::gaussian;
  config.p = 2;
  config.n = 60;
  config.lag_list = {1, 2};
  config.alpha = 0.05;
  config.reps = 20;
  config.n_draws = 80;
  config.master_seed = 99;
  return config;
}

std::string csv_of(const SimReport& report, bool timings = false) {
  std::ostringstream out;
  report.write_csv(out, timings);
  return out.str();
}

}  // namespace

TEST_CASE("gaussian noise fills column by column from one stream") {
  const Matrix z = gen_gaussian_noise(2, 5, 404);
  auto rng = make_rng(404);
  std::normal_distribution<double> normal(0.0, 1.0);
  CHECK(z(0, 0) == normal(rng));
  CHECK(z(1, 0) == normal(rng));
  CHECK(z(0, 1) == normal(rng));
  CHECK(z(1, 1) == normal(rng));

  // determinism and marginal moments
  const Matrix big = gen_gaussian_noise(2, 100000, 11);
  CHECK((big.array() == gen_gaussian_noise(2, 100000, 11).array()).all());
  CHECK(std::abs(big.row(0).mean()) < 0.02);
  CHECK(big.row(1).array().square().mean() == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("conditionally heteroscedastic noise hits its stationary variance") {
  const std::uint64_t seed = 31337;
  const Index n = 100000;
  const Matrix u = gen_arch_noise(1, n, seed);

  // replicate the documented recursion exactly
  auto rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> g0_dist(0.25, 0.5);
  std::uniform_real_distribution<double> g1_dist(0.0, 0.5);
  const double g0 = g0_dist(rng);
  const double g1 = g1_dist(rng);
  Eigen::RowVectorXd expected(n);
  double prev = 0.0;
  for (Index step = 0; step < 100 + n; ++step) {
    const double s2 = step == 0 ? g0 / (1.0 - g1) : g0 + g1 * prev * prev;
    prev = std::sqrt(s2) * normal(rng);
    if (step >= 100) expected[step - 100] = prev;
  }
  CHECK((u.row(0).array() == expected.array()).all());

  // the marginal variance of the chain is g0 / (1 - g1)
  const double want = g0 / (1.0 - g1);
  CHECK(std::abs(u.row(0).array().square().mean() - want) < 0.05 * want);
  // white noise: first-order autocorrelation near zero despite the
  // volatility clustering
  const auto set = sample_autocorr_set(make_panel(u), 1);
  CHECK(std::abs(set.gamma[1](0, 0)) < 0.03);
}

TEST_CASE("near-singular equicorrelation loading squares back to its target") {
  const Index p = 4;
  const Matrix a = model1_loading(p);
  CHECK((a - a.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Matrix s(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j)
      s(i, j) = std::pow(0.995, double(std::abs(i - j)));
  CHECK((a * a - s).cwiseAbs().maxCoeff() < 1e-10);

  // the panel's sample covariance approaches that target
  const TimeSeriesPanel x = gen_model1(3, 100000, NoiseKind::gaussian, 5);
  CHECK(!x.centered);
  const Matrix cov = x.values * x.values.transpose() / 100000.0;
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j)
      CHECK(cov(i, j) ==
            doctest::Approx(std::pow(0.995, double(std::abs(i - j))))
                .epsilon(0.03));
}

TEST_CASE("block loading leaves cross-block components uncorrelated") {
  const Index p = 5;  // blocks of size ceil(5 / 2.5) = 2, one leftover
  const Matrix a = model2_loading(p);
  const Matrix s = a * a;
  CHECK(s(0, 1) == doctest::Approx(0.8).epsilon(1e-10));
  CHECK(s(2, 3) == doctest::Approx(0.8).epsilon(1e-10));
  CHECK(std::abs(s(0, 2)) < 1e-10);
  CHECK(std::abs(s(1, 4)) < 1e-10);
  CHECK(s(4, 4) == doctest::Approx(1.0).epsilon(1e-10));

  const TimeSeriesPanel x = gen_model2(5, 100000, NoiseKind::gaussian, 6);
  const Matrix cov = x.values * x.values.transpose() / 100000.0;
  CHECK(cov(0, 1) == doctest::Approx(0.8).epsilon(0.05));
  CHECK(std::abs(cov(0, 4)) < 0.03);
  CHECK(std::abs(cov(1, 2)) < 0.03);
}

TEST_CASE("random loadings are deterministic in the seed") {
  const Matrix a = model3_loading(6, 21);
  CHECK((a.array() == model3_loading(6, 21).array()).all());
  CHECK((a.array() != model3_loading(6, 22).array()).any());
  CHECK(a.cwiseAbs().maxCoeff() <= 1.0);

  const TimeSeriesPanel x = gen_model3(4, 50, NoiseKind::arch, 9);
  const TimeSeriesPanel y = gen_model3(4, 50, NoiseKind::arch, 9);
  CHECK((x.values.array() == y.values.array()).all());
}

TEST_CASE("autoregressive transition block is stable and localized") {
  for (Index p : {Index(15), Index(100)}) {
    const Index k0 = std::min<Index>(Index(std::ceil(double(p) / 5.0)), 12);
    const Matrix a = model4_loading(p, 17);
    // entries outside the leading block are identically zero
    for (Index i = 0; i < p; ++i)
      for (Index j = 0; j < p; ++j)
        if (i >= k0 || j >= k0) CHECK(a(i, j) == 0.0);
    const Eigen::EigenSolver<Matrix> es(a.topLeftCorner(k0, k0));
    CHECK(es.eigenvalues().cwiseAbs().maxCoeff() < 0.95);
    CHECK(a.topLeftCorner(k0, k0).cwiseAbs().maxCoeff() <= 0.25);
  }

  const TimeSeriesPanel x = gen_model4(10, 200, 3);
  CHECK(x.p() == 10);
  CHECK(x.n() == 200);
  CHECK((x.values.array() == gen_model4(10, 200, 3).values.array()).all());
  CHECK((x.values.array() != gen_model4(10, 200, 4).values.array()).any());
}

TEST_CASE("correlated noise rows carry the banded correlation profile") {
  // with a single component the panel is 0.8 times the correlated noise row,
  // so its autocorrelations expose the banded Toeplitz construction directly
  const Index n = 3000;
  const TimeSeriesPanel x = gen_model5(1, n, 13);
  CHECK(x.p() == 1);
  const auto set = sample_autocorr_set(center(x), 8);
  CHECK(std::abs(set.gamma[1](0, 0) - 0.5) < 0.06);
  CHECK(std::abs(set.gamma[7](0, 0) - 0.5 * std::pow(7.0, -0.6)) < 0.06);
  CHECK(std::abs(set.gamma[8](0, 0)) < 0.06);
  // variance of 0.8 * unit-variance noise
  CHECK(std::abs(set.sigma[0](0, 0) - 0.64) < 0.06);

  const TimeSeriesPanel wide = gen_model5(12, 80, 14);
  CHECK(wide.p() == 12);
  CHECK((wide.values.array() == gen_model5(12, 80, 14).values.array()).all());
}

TEST_CASE("cell summaries compute the binomial standard error") {
  SimCell cell;
  cell.method = Method::q1;
  cell.lags = 2;
  cell.rejections = 100;
  cell.reps = 400;
  CHECK(cell.rate() == 0.25);
  CHECK(cell.mc_se() == doctest::Approx(0.021650635094610966).epsilon(1e-12));
  SimCell empty;
  CHECK(empty.rate() == 0.0);
  CHECK(empty.mc_se() == 0.0);
}

TEST_CASE("config parser covers every key and rejects what it cannot read") {
  std::istringstream in(
      "# size experiment\n"
      "model = m4\n"
      "noise = arch   # ignored by m4 but legal\n"
      "p = 15\n"
      "n = 300\n"
      "lags = 2, 4, 6\n"
      "alpha = 0.10\n"
      "reps = 42\n"
      "draws = 500\n"
      "seed = 777\n"
      "methods = maxcorr, q1, tb\n"
      "pretransform = yes\n"
      "fixed_loading = true\n"
      "center = 1\n"
      "tspca_lags = 4\n");
  const SimConfig c = parse_sim_config(in);
  CHECK(c.model == SimModel::m4);
  CHECK(c.noise == NoiseKind::arch);
  CHECK(c.p == 15);
  CHECK(c.n == 300);
  CHECK(c.lag_list == std::vector<int>{2, 4, 6});
  CHECK(c.alpha == 0.10);
  CHECK(c.reps == 42);
  CHECK(c.n_draws == 500);
  CHECK(c.master_seed == 777);
  REQUIRE(c.methods.size() == 3);
  CHECK(c.methods[0] == Method::maxcorr);
  CHECK(c.methods[1] == Method::q1);
  CHECK(c.methods[2] == Method::tiao_box);
  CHECK(c.pretransform);
  CHECK(c.fixed_loading);
  CHECK(c.center);
  CHECK(c.tspca_lags == 4);

  auto rejects = [](const char* text) {
    std::istringstream bad(text);
    CHECK_THROWS_AS(parse_sim_config(bad), ParseError);
  };
  rejects("model = m9\n");
  rejects("noise = cauchy\n");
  rejects("p = three\n");
  rejects("reps = 1.5\n");
  rejects("pretransform = maybe\n");
  rejects("methods = maxcorr, boxpierce\n");
  rejects("frobnicate = 1\n");
  rejects("model m1\n");
  rejects("lags = 0\n");
  rejects("alpha = 1.5\n");
  rejects("reps = 0\n");
  rejects("n = 2\n");
  rejects("lags = 400\n");  // beyond n - 2 at the default n
  CHECK_THROWS_AS(load_sim_config("no_such_config.cfg"), ParseError);
}

TEST_CASE("experiment plans one cell per method-lag pair") {
  SimConfig config = tiny_config();
  const SimReport report = run_experiment(config);
  // 5 lagged methods x 2 lags + the lag-free likelihood ratio test
  CHECK(report.cells.size() == 11);
  for (Method m : {Method::maxcorr, Method::q1, Method::q2, Method::q3,
                   Method::lm}) {
    for (int k : {1, 2}) {
      const SimCell* cell = report.find(m, k);
      REQUIRE(cell != nullptr);
      CHECK(!cell->skipped);
      CHECK(cell->reps == 20);
      CHECK(cell->rejections >= 0);
      CHECK(cell->rejections <= 20);
    }
  }
  const SimCell* tb = report.find(Method::tiao_box, 0);
  REQUIRE(tb != nullptr);
  CHECK(tb->reps == 20);
  CHECK(report.find(Method::maxcorr, 3) == nullptr);
  CHECK(report.total_seconds >= 0.0);
}

TEST_CASE("reports are byte-identical across runs and worker counts") {
  SimConfig config = tiny_config();
  const std::string one = csv_of(run_experiment(config, 1));
  const std::string again = csv_of(run_experiment(config, 1));
  const std::string three = csv_of(run_experiment(config, 3));
  CHECK(one == again);
  CHECK(one == three);
  CHECK(one.rfind("method,K,reject_rate,mc_se,reps,seconds\n", 0) == 0);
  // the default timing column is frozen at zero
  CHECK(one.find(",0.000\n") != std::string::npos);
  CHECK(one.find("maxcorr,1,") != std::string::npos);
  CHECK(one.find("tb,0,") != std::string::npos);

  // a different master seed changes the outcome of at least one cell
  config.master_seed = 100;
  CHECK(csv_of(run_experiment(config)) != one);
}

TEST_CASE("infeasible regression cells are reported as NA") {
  SimConfig config;
  config.model = SimModel::m1;
  config.p = 10;
  config.n = 52;
  config.lag_list = {5};
  config.reps = 2;
  config.n_draws = 10;
  config.methods = {Method::lm, Method::q1};
  const SimReport report = run_experiment(config);
  const SimCell* lm = report.find(Method::lm, 5);
  REQUIRE(lm != nullptr);
  CHECK(lm->skipped);
  CHECK(lm->reps == 0);
  CHECK(csv_of(report).find("lm,5,NA,NA,0,0.000\n") != std::string::npos);
  // the feasible cell still ran
  const SimCell* q1 = report.find(Method::q1, 5);
  REQUIRE(q1 != nullptr);
  CHECK(q1->reps == 2);
}

TEST_CASE("pre-transform flag appends the rotated variant to the plan") {
  SimConfig config = tiny_config();
  config.methods = {Method::maxcorr};
  config.pretransform = true;
  config.tspca_lags = 3;
  config.reps = 3;
  config.n_draws = 40;
  const SimReport report = run_experiment(config);
  CHECK(report.cells.size() == 4);  // two lags for each variant
  CHECK(report.find(Method::maxcorr, 1) != nullptr);
  CHECK(report.find(Method::maxcorr_tspca, 1) != nullptr);
  CHECK(report.find(Method::maxcorr_tspca, 2) != nullptr);
}

TEST_CASE("null-model sizes land near the nominal level") {
  SimConfig config;
  config.model = SimModel::m1;
  config.p = 2;
  config.n = 100;
  config.lag_list = {2};
  config.alpha = 0.05;
  config.reps = 50;
  config.n_draws = 100;
  config.master_seed = 5;
  config.methods = {Method::q1};
  const SimReport report = run_experiment(config);
  const SimCell* cell = report.find(Method::q1, 2);
  REQUIRE(cell != nullptr);
  // a loose sanity band: ~0.05 with binomial noise at 50 replications
  CHECK(cell->rate() <= 0.20);
}

TEST_CASE("invalid configurations are rejected before any work happens") {
  SimConfig config = tiny_config();
  config.methods.clear();
  CHECK_THROWS_AS(run_experiment(config), ParseError);
  config = tiny_config();
  config.lag_list = {59};
  CHECK_THROWS_AS(run_experiment(config), ParseError);
}
