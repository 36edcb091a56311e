#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wnmax/baselines.hpp"
#include "wnmax/diagnostics.hpp"
#include "wnmax/errors.hpp"
#include "wnmax/maxcorr.hpp"
#include "wnmax/panel.hpp"
#include "wnmax/simlab.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInfeasible = 4;

struct TestArgs {
  std::string input;
  int lags = 2;
  double alpha = 0.05;
  long draws = 2000;
  std::uint64_t seed = 1;
  std::string method = "maxcorr";
  bool tspca = false;
  bool no_center = false;
  bool has_header = false;
  int var_order = -1;  // >= 0: fit a VAR first and test the residuals
  std::optional<double> bandwidth;
  std::string output;
  std::string format = "kv";
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_body(const std::string& body, const std::string& output) {
  if (output.empty()) {
    std::cout << body;
  } else {
    std::ofstream out(output);
    if (!out) throw wnmax::ParseError("cannot write " + output);
    out << body;
  }
}

int cmd_test(const TestArgs& args) {
  const wnmax::TimeSeriesPanel panel =
      wnmax::load_csv(args.input, args.has_header);
  const auto method = wnmax::method_from_name(args.method);
  if (!method) throw UsageError("unknown method '" + args.method + "'");
  if (args.tspca && *method != wnmax::Method::maxcorr &&
      *method != wnmax::Method::maxcorr_tspca)
    throw UsageError("--tspca applies only to the maxcorr method");

  wnmax::TestResult result;
  if (args.var_order >= 0) {
    const wnmax::FittedModel model = wnmax::fit_var(panel, args.var_order);
    wnmax::ResidualTestOptions options;
    options.alpha = args.alpha;
    options.n_draws = args.draws;
    options.seed = args.seed;
    options.maxcorr.center = !args.no_center;
    options.maxcorr.bandwidth = args.bandwidth;
    wnmax::Method m = *method;
    if (m == wnmax::Method::maxcorr && args.tspca)
      m = wnmax::Method::maxcorr_tspca;
    result = wnmax::test_residuals(model, m, args.lags, options);
  } else {
    switch (*method) {
      case wnmax::Method::maxcorr:
      case wnmax::Method::maxcorr_tspca: {
        const bool pre =
            args.tspca || *method == wnmax::Method::maxcorr_tspca;
        wnmax::MaxCorrOptions options;
        options.center = !args.no_center;
        options.bandwidth = args.bandwidth;
        result = wnmax::run_maxcorr_test(panel, args.lags, args.alpha,
                                         args.draws, args.seed, pre, options);
        break;
      }
      case wnmax::Method::q1:
      case wnmax::Method::q2:
      case wnmax::Method::q3: {
        const wnmax::PortmanteauVariant variant =
            *method == wnmax::Method::q1   ? wnmax::PortmanteauVariant::q1
            : *method == wnmax::Method::q2 ? wnmax::PortmanteauVariant::q2
                                           : wnmax::PortmanteauVariant::q3;
        result = wnmax::portmanteau_test(panel, variant, args.lags, args.alpha,
                                         {!args.no_center, std::nullopt});
        break;
      }
      case wnmax::Method::lm: {
        auto r = wnmax::lm_test(panel, args.lags, args.alpha,
                                {!args.no_center, std::nullopt});
        if (!r)
          throw wnmax::InfeasibleError("LM test infeasible (p K >= n - K)");
        result = *r;
        break;
      }
      case wnmax::Method::tiao_box: {
        auto r = wnmax::tiao_box_test(panel, args.alpha,
                                      {!args.no_center, std::nullopt});
        if (!r)
          throw wnmax::InfeasibleError(
              "lag-order test infeasible (p >= n - 1)");
        result = *r;
        break;
      }
    }
  }

  std::ostringstream body;
  if (args.format == "csv") {
    body << wnmax::TestResult::csv_header() << '\n';
    result.write_csv_row(body);
  } else {
    result.write_kv(body);
  }
  write_body(body.str(), args.output);
  return kExitOk;
}

std::vector<int> parse_lag_list(const std::string& text) {
  std::vector<int> lags;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const int k = std::stoi(item, &pos);
      if (pos != item.size() || k < 1) throw std::invalid_argument(item);
      lags.push_back(k);
    } catch (const std::exception&) {
      throw UsageError("bad lag list entry '" + item + "'");
    }
  }
  if (lags.empty()) throw UsageError("empty lag list");
  return lags;
}

std::vector<wnmax::Method> parse_method_list(const std::string& text) {
  std::vector<wnmax::Method> methods;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto m = wnmax::method_from_name(item);
    if (!m) throw UsageError("unknown method '" + item + "'");
    methods.push_back(*m);
  }
  if (methods.empty()) throw UsageError("empty method list");
  return methods;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"White-noise tests for high-dimensional time series"};
  app.require_subcommand(1);

  TestArgs targs;
  auto* test = app.add_subcommand("test", "Run one test on a CSV panel");
  test->add_option("--input", targs.input, "CSV file, rows = time points")
      ->required();
  test->add_option("--lags", targs.lags, "Number of lags K")
      ->check(CLI::PositiveNumber);
  test->add_option("--alpha", targs.alpha, "Test level")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9));
  test->add_option("--draws", targs.draws, "Multiplier draws B")
      ->check(CLI::PositiveNumber);
  test->add_option("--seed", targs.seed, "RNG seed");
  test->add_option("--method", targs.method, "Test to run")
      ->check(CLI::IsMember({"maxcorr", "q1", "q2", "q3", "lm", "tb"}));
  test->add_flag("--tspca", targs.tspca, "Decorrelating pre-transform");
  test->add_flag("--no-center", targs.no_center,
                 "Skip centering (mean-zero data)");
  test->add_flag("--has-header", targs.has_header,
                 "First CSV line is a header");
  test->add_option("--fit-var", targs.var_order,
                   "Fit a VAR of this order first and test its residuals")
      ->check(CLI::NonNegativeNumber);
  double bw = -1.0;
  auto* bw_opt =
      test->add_option("--bandwidth", bw, "Override the plug-in bandwidth")
          ->check(CLI::NonNegativeNumber);
  test->add_option("--output", targs.output, "Write the result here");
  test->add_option("--format", targs.format, "Output format")
      ->check(CLI::IsMember({"kv", "csv"}));

  std::string s_config, s_output, s_model, s_noise, s_lags, s_methods;
  long s_p = 0, s_n = 0, s_reps = 0, s_draws = 0;
  double s_alpha = 0.0;
  std::uint64_t s_seed = 0;
  bool s_pre = false, s_fixed = false, s_center = false;
  int s_tspca_lags = 0, s_jobs = 1;
  bool s_timings = false, s_progress = false;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo size/power study");
  sim->add_option("--config", s_config, "key = value config file");
  auto* o_model = sim->add_option("--model", s_model, "Data model")
                      ->check(CLI::IsMember({"m1", "m2", "m3", "m4", "m5"}));
  auto* o_noise = sim->add_option("--noise", s_noise, "Noise kind")
                      ->check(CLI::IsMember({"gaussian", "arch"}));
  auto* o_p = sim->add_option("--p", s_p, "Panel dimension")
                  ->check(CLI::PositiveNumber);
  auto* o_n = sim->add_option("--n", s_n, "Series length")
                  ->check(CLI::Range(long(4), long(1) << 40));
  auto* o_lags = sim->add_option("--lags", s_lags, "Comma list of K values");
  auto* o_alpha = sim->add_option("--alpha", s_alpha, "Test level")
                      ->check(CLI::Range(1e-9, 1.0 - 1e-9));
  auto* o_reps = sim->add_option("--reps", s_reps, "Replications")
                     ->check(CLI::PositiveNumber);
  auto* o_draws = sim->add_option("--draws", s_draws, "Multiplier draws B")
                      ->check(CLI::PositiveNumber);
  auto* o_seed = sim->add_option("--seed", s_seed, "Master seed");
  auto* o_methods =
      sim->add_option("--methods", s_methods, "Comma list of methods");
  auto* o_pre = sim->add_flag("--pretransform", s_pre,
                              "Also run the pre-transformed test");
  auto* o_fixed = sim->add_flag("--fixed-loading", s_fixed,
                                "Draw random loadings once, not per rep");
  auto* o_center =
      sim->add_flag("--center", s_center, "Center each generated panel");
  auto* o_tspca = sim->add_option("--tspca-lags", s_tspca_lags,
                                  "Pre-transform lag horizon")
                      ->check(CLI::NonNegativeNumber);
  sim->add_option("--jobs", s_jobs, "Worker threads")
      ->check(CLI::PositiveNumber);
  sim->add_flag("--timings", s_timings,
                "Write measured seconds into the CSV");
  sim->add_flag("--progress", s_progress, "Progress counter on stderr");
  sim->add_option("--output", s_output, "Write the report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (bw_opt->count()) targs.bandwidth = bw;

  try {
    if (app.got_subcommand("test")) return cmd_test(targs);

    // Simulation configs are user input like flags are, so a bad key or
    // value is a usage error here, not a data error.
    try {
      wnmax::SimConfig config;
      if (!s_config.empty()) config = wnmax::load_sim_config(s_config);
      if (o_model->count())
        config.model = s_model == "m1"   ? wnmax::SimModel::m1
                       : s_model == "m2" ? wnmax::SimModel::m2
                       : s_model == "m3" ? wnmax::SimModel::m3
                       : s_model == "m4" ? wnmax::SimModel::m4
                                         : wnmax::SimModel::m5;
      if (o_noise->count())
        config.noise = s_noise == "arch" ? wnmax::NoiseKind::arch
                                         : wnmax::NoiseKind::gaussian;
      if (o_p->count()) config.p = s_p;
      if (o_n->count()) config.n = s_n;
      if (o_lags->count()) config.lag_list = parse_lag_list(s_lags);
      if (o_alpha->count()) config.alpha = s_alpha;
      if (o_reps->count()) config.reps = int(s_reps);
      if (o_draws->count()) config.n_draws = s_draws;
      if (o_seed->count()) config.master_seed = s_seed;
      if (o_methods->count()) config.methods = parse_method_list(s_methods);
      if (o_pre->count()) config.pretransform = s_pre;
      if (o_fixed->count()) config.fixed_loading = s_fixed;
      if (o_center->count()) config.center = s_center;
      if (o_tspca->count()) config.tspca_lags = s_tspca_lags;

      const wnmax::SimReport report =
          wnmax::run_experiment(config, s_jobs, s_progress);
      std::ostringstream body;
      report.write_csv(body, s_timings);
      write_body(body.str(), s_output);
      std::cerr << "[sim] total " << report.total_seconds << "s\n";
      return kExitOk;
    } catch (const wnmax::ParseError& e) {
      std::cerr << "error: " << e.what();
      if (e.line() > 0) std::cerr << " (line " << e.line() << ")";
      std::cerr << '\n';
      return kExitUsage;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const wnmax::InfeasibleError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const wnmax::ParseError& e) {
    std::cerr << "error: " << e.what();
    if (e.line() > 0) std::cerr << " (line " << e.line() << ")";
    std::cerr << '\n';
    return kExitData;
  } catch (const wnmax::DegenerateComponentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const wnmax::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
