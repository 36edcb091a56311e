#include "wnmax/simlab.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "wnmax/baselines.hpp"
#include "wnmax/errors.hpp"
#include "wnmax/rng.hpp"

namespace wnmax {

namespace {

// Stream tags hung off a replication seed.
constexpr std::uint64_t kLoadingStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kFixedLoadingStream = 0x10ad;
constexpr std::uint64_t kMaxcorrStream = 0x100;
constexpr std::uint64_t kTspcaStream = 0x200;

Index model45_rank(Index p) {
  return std::min<Index>(Index(std::ceil(double(p) / 5.0)), 12);
}

Matrix symmetric_sqrt(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  if (es.info() != Eigen::Success)
    throw NumericError("loading eigendecomposition failed");
  Vector lambda = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

Matrix gen_gaussian_noise(Index p, Index n, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(p, n);
  for (Index t = 0; t < n; ++t)
    for (Index i = 0; i < p; ++i) z(i, t) = normal(rng);
  return z;
}

Matrix gen_arch_noise(Index p, Index n, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> g0_dist(0.25, 0.5);
  std::uniform_real_distribution<double> g1_dist(0.0, 0.5);
  constexpr int kBurnIn = 100;
  Matrix u(p, n);
  for (Index i = 0; i < p; ++i) {
    const double g0 = g0_dist(rng);
    const double g1 = g1_dist(rng);
    double prev = 0.0;
    for (Index step = 0; step < kBurnIn + n; ++step) {
      const double s2 = step == 0 ? g0 / (1.0 - g1) : g0 + g1 * prev * prev;
      prev = std::sqrt(s2) * normal(rng);
      if (step >= kBurnIn) u(i, step - kBurnIn) = prev;
    }
  }
  return u;
}

Matrix model1_loading(Index p) {
  Matrix s(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j)
      s(i, j) = std::pow(0.995, double(std::abs(i - j)));
  return symmetric_sqrt(s);
}

Matrix model2_loading(Index p) {
  const Index r = Index(std::ceil(double(p) / 2.5));
  const Index blocks = p / r;
  Matrix s = Matrix::Identity(p, p);
  for (Index b = 0; b < blocks; ++b)
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < r; ++j)
        if (i != j) s(b * r + i, b * r + j) = 0.8;
  return symmetric_sqrt(s);
}

Matrix model3_loading(Index p, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  Matrix a(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) a(i, j) = uniform(rng);
  return a;
}

Matrix model4_loading(Index p, std::uint64_t seed) {
  const Index k0 = model45_rank(p);
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> uniform(-0.25, 0.25);
  Matrix a = Matrix::Zero(p, p);
  for (;;) {
    Matrix block(k0, k0);
    for (Index i = 0; i < k0; ++i)
      for (Index j = 0; j < k0; ++j) block(i, j) = uniform(rng);
    const Eigen::EigenSolver<Matrix> es(block);
    if (es.eigenvalues().cwiseAbs().maxCoeff() < 0.95) {
      a.topLeftCorner(k0, k0) = block;
      return a;
    }
  }
}

Matrix model5_loading(Index p, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> pick(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  Matrix a = Matrix::Zero(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) {
      if (i == j)
        a(i, j) = 0.8;
      else if (pick(rng) < 1.0 / 3.0)
        a(i, j) = uniform(rng);
    }
  return a;
}

namespace {

TimeSeriesPanel static_panel(const Matrix& loading, NoiseKind noise, Index n,
                             std::uint64_t noise_seed) {
  const Index p = loading.rows();
  const Matrix z = noise == NoiseKind::gaussian
                       ? gen_gaussian_noise(p, n, noise_seed)
                       : gen_arch_noise(p, n, noise_seed);
  return TimeSeriesPanel{loading * z, false};
}

TimeSeriesPanel model4_panel(const Matrix& loading, Index n,
                             std::uint64_t noise_seed) {
  const Index p = loading.rows();
  const Index k0 = model45_rank(p);
  constexpr Index kBurnIn = 200;
  const Matrix block = loading.topLeftCorner(k0, k0);

  auto rng = make_rng(noise_seed);
  std::student_t_distribution<double> t8(8.0);
  Matrix e(p, n + kBurnIn);
  for (Index t = 0; t < n + kBurnIn; ++t)
    for (Index i = 0; i < p; ++i) e(i, t) = t8(rng);

  Matrix x(p, n);
  Vector prev = e.col(0);
  if (kBurnIn == 0) x.col(0) = prev;
  for (Index t = 1; t < n + kBurnIn; ++t) {
    Vector cur = e.col(t);
    cur.head(k0).noalias() += block * prev.head(k0);
    prev = cur;
    if (t >= kBurnIn) x.col(t - kBurnIn) = cur;
  }
  return TimeSeriesPanel{std::move(x), false};
}

// Banded Toeplitz covariance of the correlated noise rows: unit diagonal,
// 0.5 |i-j|^{-0.6} within band 7, zero beyond. Its Cholesky factor keeps the
// lower bandwidth.
Matrix banded_chol(Index n) {
  constexpr Index kBand = 7;
  auto sigma = [](Index i, Index j) {
    const Index d = std::abs(i - j);
    if (d == 0) return 1.0;
    if (d > kBand) return 0.0;
    return 0.5 * std::pow(double(d), -0.6);
  };
  Matrix l = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = std::max<Index>(0, i - kBand); j <= i; ++j) {
      double s = sigma(i, j);
      for (Index k = std::max<Index>(0, i - kBand); k < j; ++k)
        s -= l(i, k) * l(j, k);
      if (j == i) {
        if (!(s > 0.0))
          throw NumericError("banded covariance is not positive definite");
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

TimeSeriesPanel model5_panel(const Matrix& loading, Index n,
                             std::uint64_t noise_seed) {
  const Index p = loading.rows();
  const Index k0 = model45_rank(p);
  const Matrix l = banded_chol(n);

  auto rng = make_rng(noise_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::student_t_distribution<double> t8(8.0);
  Matrix z(p, n);
  Vector g(n);
  for (Index i = 0; i < k0; ++i) {
    for (Index t = 0; t < n; ++t) g[t] = normal(rng);
    z.row(i) = (l.triangularView<Eigen::Lower>() * g).transpose();
  }
  for (Index i = k0; i < p; ++i)
    for (Index t = 0; t < n; ++t) z(i, t) = t8(rng);
  return TimeSeriesPanel{loading * z, false};
}

}  // namespace

TimeSeriesPanel gen_model1(Index p, Index n, NoiseKind noise,
                           std::uint64_t seed) {
  return static_panel(model1_loading(p), noise, n, mix_seed(seed, kNoiseStream));
}

TimeSeriesPanel gen_model2(Index p, Index n, NoiseKind noise,
                           std::uint64_t seed) {
  return static_panel(model2_loading(p), noise, n, mix_seed(seed, kNoiseStream));
}

TimeSeriesPanel gen_model3(Index p, Index n, NoiseKind noise,
                           std::uint64_t seed) {
  return static_panel(model3_loading(p, mix_seed(seed, kLoadingStream)), noise,
                      n, mix_seed(seed, kNoiseStream));
}

TimeSeriesPanel gen_model4(Index p, Index n, std::uint64_t seed) {
  return model4_panel(model4_loading(p, mix_seed(seed, kLoadingStream)), n,
                      mix_seed(seed, kNoiseStream));
}

TimeSeriesPanel gen_model5(Index p, Index n, std::uint64_t seed) {
  return model5_panel(model5_loading(p, mix_seed(seed, kLoadingStream)), n,
                      mix_seed(seed, kNoiseStream));
}

double SimCell::mc_se() const {
  if (reps <= 0) return 0.0;
  const double r = rate();
  return std::sqrt(r * (1.0 - r) / double(reps));
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

long parse_long(const std::string& key, const std::string& value, long line) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad integer for '" + key + "': '" + value + "'", line);
  }
}

double parse_double(const std::string& key, const std::string& value,
                    long line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad number for '" + key + "': '" + value + "'", line);
  }
}

bool parse_bool(const std::string& key, const std::string& value, long line) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ParseError("bad boolean for '" + key + "': '" + value + "'", line);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void apply_key(SimConfig& config, const std::string& key,
               const std::string& value, long line) {
  if (key == "model") {
    if (value == "m1") config.model = SimModel::m1;
    else if (value == "m2") config.model = SimModel::m2;
    else if (value == "m3") config.model = SimModel::m3;
    else if (value == "m4") config.model = SimModel::m4;
    else if (value == "m5") config.model = SimModel::m5;
    else throw ParseError("unknown model '" + value + "'", line);
  } else if (key == "noise") {
    if (value == "gaussian") config.noise = NoiseKind::gaussian;
    else if (value == "arch") config.noise = NoiseKind::arch;
    else throw ParseError("unknown noise '" + value + "'", line);
  } else if (key == "p") {
    config.p = parse_long(key, value, line);
  } else if (key == "n") {
    config.n = parse_long(key, value, line);
  } else if (key == "lags" || key == "K") {
    config.lag_list.clear();
    for (const auto& item : split_list(value))
      config.lag_list.push_back(int(parse_long(key, item, line)));
  } else if (key == "alpha") {
    config.alpha = parse_double(key, value, line);
  } else if (key == "reps") {
    config.reps = int(parse_long(key, value, line));
  } else if (key == "draws" || key == "B") {
    config.n_draws = parse_long(key, value, line);
  } else if (key == "seed") {
    config.master_seed = std::uint64_t(parse_long(key, value, line));
  } else if (key == "methods") {
    config.methods.clear();
    for (const auto& item : split_list(value)) {
      const auto m = method_from_name(item);
      if (!m) throw ParseError("unknown method '" + item + "'", line);
      config.methods.push_back(*m);
    }
  } else if (key == "pretransform") {
    config.pretransform = parse_bool(key, value, line);
  } else if (key == "fixed_loading") {
    config.fixed_loading = parse_bool(key, value, line);
  } else if (key == "center") {
    config.center = parse_bool(key, value, line);
  } else if (key == "tspca_lags") {
    config.tspca_lags = int(parse_long(key, value, line));
  } else {
    throw ParseError("unknown key '" + key + "'", line);
  }
}

void validate(const SimConfig& config) {
  if (config.p < 1) throw ParseError("p must be >= 1");
  if (config.n < 4) throw ParseError("n must be >= 4");
  if (config.lag_list.empty()) throw ParseError("lag list is empty");
  for (int k : config.lag_list)
    if (k < 1 || Index(k) > config.n - 2)
      throw ParseError("lag " + std::to_string(k) + " outside [1, n - 2]");
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    throw ParseError("alpha must lie in (0, 1)");
  if (config.reps < 1) throw ParseError("reps must be >= 1");
  if (config.n_draws < 1) throw ParseError("draws must be >= 1");
  if (config.methods.empty()) throw ParseError("method list is empty");
  if (config.tspca_lags < 0 || Index(config.tspca_lags) > config.n - 2)
    throw ParseError("tspca_lags outside [0, n - 2]");
}

}  // namespace

SimConfig parse_sim_config(std::istream& in) {
  SimConfig config;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("expected 'key = value', got '" + line + "'", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ParseError("expected 'key = value', got '" + line + "'", line_no);
    apply_key(config, key, value, line_no);
  }
  validate(config);
  return config;
}

SimConfig load_sim_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return parse_sim_config(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line());
  }
}

void SimReport::write_csv(std::ostream& out, bool include_timings) const {
  out << "method,K,reject_rate,mc_se,reps,seconds\n";
  char buf[128];
  for (const auto& cell : cells) {
    if (cell.skipped) {
      std::snprintf(buf, sizeof buf, "%s,%d,NA,NA,0,%.3f",
                    method_name(cell.method), cell.lags,
                    include_timings ? cell.seconds : 0.0);
    } else {
      std::snprintf(buf, sizeof buf, "%s,%d,%.6f,%.6f,%d,%.3f",
                    method_name(cell.method), cell.lags, cell.rate(),
                    cell.mc_se(), cell.reps,
                    include_timings ? cell.seconds : 0.0);
    }
    out << buf << '\n';
  }
}

const SimCell* SimReport::find(Method method, int lags) const {
  for (const auto& cell : cells)
    if (cell.method == method && cell.lags == lags) return &cell;
  return nullptr;
}

namespace {

struct CellSpec {
  Method method;
  int lags;  // 0 for the lag-free test
  bool skipped;
};

std::vector<CellSpec> plan_cells(const SimConfig& config) {
  std::vector<Method> methods = config.methods;
  if (config.pretransform &&
      std::find(methods.begin(), methods.end(), Method::maxcorr_tspca) ==
          methods.end())
    methods.push_back(Method::maxcorr_tspca);

  std::vector<CellSpec> cells;
  for (Method m : methods) {
    if (m == Method::tiao_box) {
      cells.push_back({m, 0, config.p >= config.n - 1});
      continue;
    }
    for (int k : config.lag_list) {
      bool skipped = false;
      if (m == Method::lm) skipped = !lm_feasible(config.p, k, config.n);
      cells.push_back({m, k, skipped});
    }
  }
  return cells;
}

TimeSeriesPanel generate_panel(const SimConfig& config,
                               const std::optional<Matrix>& fixed_loading,
                               std::uint64_t rep_seed) {
  const std::uint64_t noise_seed = mix_seed(rep_seed, kNoiseStream);
  Matrix loading;
  const Matrix* a = nullptr;
  if (fixed_loading) {
    a = &*fixed_loading;
  } else {
    const std::uint64_t loading_seed = mix_seed(rep_seed, kLoadingStream);
    switch (config.model) {
      case SimModel::m3: loading = model3_loading(config.p, loading_seed); break;
      case SimModel::m4: loading = model4_loading(config.p, loading_seed); break;
      case SimModel::m5: loading = model5_loading(config.p, loading_seed); break;
      default: throw std::logic_error("null-model loading must be precomputed");
    }
    a = &loading;
  }
  switch (config.model) {
    case SimModel::m1:
    case SimModel::m2:
    case SimModel::m3:
      return static_panel(*a, config.noise, config.n, noise_seed);
    case SimModel::m4:
      return model4_panel(*a, config.n, noise_seed);
    case SimModel::m5:
      return model5_panel(*a, config.n, noise_seed);
  }
  throw std::logic_error("unknown model");
}

bool run_cell(const SimConfig& config, const TimeSeriesPanel& panel,
              const CellSpec& cell, std::uint64_t rep_seed) {
  MaxCorrOptions mopts;
  mopts.center = false;  // the panel is centered (or deliberately raw) already
  mopts.tspca_lags = config.tspca_lags;
  BaselineOptions bopts;
  bopts.center = false;
  switch (cell.method) {
    case Method::maxcorr:
      return run_maxcorr_test(
                 panel, cell.lags, config.alpha, config.n_draws,
                 mix_seed(rep_seed, kMaxcorrStream + std::uint64_t(cell.lags)),
                 false, mopts)
          .reject;
    case Method::maxcorr_tspca:
      return run_maxcorr_test(
                 panel, cell.lags, config.alpha, config.n_draws,
                 mix_seed(rep_seed, kTspcaStream + std::uint64_t(cell.lags)),
                 true, mopts)
          .reject;
    case Method::q1:
      return portmanteau_test(panel, PortmanteauVariant::q1, cell.lags,
                              config.alpha, bopts)
          .reject;
    case Method::q2:
      return portmanteau_test(panel, PortmanteauVariant::q2, cell.lags,
                              config.alpha, bopts)
          .reject;
    case Method::q3:
      return portmanteau_test(panel, PortmanteauVariant::q3, cell.lags,
                              config.alpha, bopts)
          .reject;
    case Method::lm:
      return lm_test(panel, cell.lags, config.alpha, bopts)->reject;
    case Method::tiao_box:
      return tiao_box_test(panel, config.alpha, bopts)->reject;
  }
  throw std::logic_error("unknown method");
}

}  // namespace

SimReport run_experiment(const SimConfig& config, int jobs, bool progress) {
  validate(config);
  const auto cells = plan_cells(config);
  const bool show_progress = progress && isatty(fileno(stderr));

  std::optional<Matrix> fixed_loading;
  switch (config.model) {
    case SimModel::m1: fixed_loading = model1_loading(config.p); break;
    case SimModel::m2: fixed_loading = model2_loading(config.p); break;
    case SimModel::m3:
      if (config.fixed_loading)
        fixed_loading = model3_loading(
            config.p, mix_seed(config.master_seed, kFixedLoadingStream));
      break;
    case SimModel::m4:
      if (config.fixed_loading)
        fixed_loading = model4_loading(
            config.p, mix_seed(config.master_seed, kFixedLoadingStream));
      break;
    case SimModel::m5:
      if (config.fixed_loading)
        fixed_loading = model5_loading(
            config.p, mix_seed(config.master_seed, kFixedLoadingStream));
      break;
  }

  const auto wall_start = std::chrono::steady_clock::now();
  const int workers = std::max(1, std::min(jobs, config.reps));

  std::vector<long> rejections(cells.size(), 0);
  std::vector<double> seconds(cells.size(), 0.0);
  std::mutex merge_mu;
  std::atomic<int> next_rep{0};
  std::atomic<int> done{0};
  std::exception_ptr error;
  std::mutex error_mu;

  auto worker = [&] {
    std::vector<long> local_rej(cells.size(), 0);
    std::vector<double> local_sec(cells.size(), 0.0);
    try {
      for (int r = next_rep.fetch_add(1); r < config.reps;
           r = next_rep.fetch_add(1)) {
        const std::uint64_t rep_seed = mix_seed(config.master_seed, r);
        TimeSeriesPanel panel = generate_panel(config, fixed_loading, rep_seed);
        if (config.center) panel = center(panel);
        for (std::size_t c = 0; c < cells.size(); ++c) {
          if (cells[c].skipped) continue;
          const auto t0 = std::chrono::steady_clock::now();
          if (run_cell(config, panel, cells[c], rep_seed)) ++local_rej[c];
          local_sec[c] +=
              std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t0)
                  .count();
        }
        const int finished = done.fetch_add(1) + 1;
        if (show_progress) {
          std::lock_guard<std::mutex> lock(merge_mu);
          std::fprintf(stderr, "\r[sim] replication %d/%d", finished,
                       config.reps);
          std::fflush(stderr);
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mu);
      if (!error) error = std::current_exception();
    }
    std::lock_guard<std::mutex> lock(merge_mu);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      rejections[c] += local_rej[c];
      seconds[c] += local_sec[c];
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (show_progress) std::fprintf(stderr, "\n");
  if (error) std::rethrow_exception(error);

  SimReport report;
  report.config = config;
  report.total_seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - wall_start)
                             .count();
  report.cells.reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    SimCell cell;
    cell.method = cells[c].method;
    cell.lags = cells[c].lags;
    cell.skipped = cells[c].skipped;
    cell.rejections = rejections[c];
    cell.reps = cells[c].skipped ? 0 : config.reps;
    cell.seconds = seconds[c];
    report.cells.push_back(cell);
  }
  return report;
}

}  // namespace wnmax
