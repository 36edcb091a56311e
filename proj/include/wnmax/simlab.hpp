#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wnmax/maxcorr.hpp"
#include "wnmax/panel.hpp"

namespace wnmax {

// Data-generating processes of the simulation study. m1-m3 are white noise
// (size experiments): x_t = A z_t with iid noise columns. m4 and m5 are
// serially dependent (power experiments).
enum class SimModel { m1, m2, m3, m4, m5 };
enum class NoiseKind { gaussian, arch };

// p x n iid N(0, 1) draws, column by column.
Matrix gen_gaussian_noise(Index p, Index n, std::uint64_t seed);

// Componentwise ARCH(1): u_t = s_t e_t, s_t^2 = g0 + g1 u_{t-1}^2 with
// g0 ~ U(0.25, 0.5), g1 ~ U(0, 0.5) per component, chain started at the
// stationary variance and burnt in for 100 steps.
Matrix gen_arch_noise(Index p, Index n, std::uint64_t seed);

// Deterministic loadings of the null models: m1 the symmetric square root of
// S_kl = 0.995^|k-l|, m2 block-diagonal S with blocks of size ceil(p/2.5)
// filled with 0.8 off the diagonal.
Matrix model1_loading(Index p);
Matrix model2_loading(Index p);
// m3: A with independent U(-1, 1) entries.
Matrix model3_loading(Index p, std::uint64_t seed);
// m4: the VAR(1) transition matrix; m5: the contemporaneous mixing matrix.
// Structure as documented at gen_model4 / gen_model5 below.
Matrix model4_loading(Index p, std::uint64_t seed);
Matrix model5_loading(Index p, std::uint64_t seed);

TimeSeriesPanel gen_model1(Index p, Index n, NoiseKind noise, std::uint64_t seed);
TimeSeriesPanel gen_model2(Index p, Index n, NoiseKind noise, std::uint64_t seed);
TimeSeriesPanel gen_model3(Index p, Index n, NoiseKind noise, std::uint64_t seed);
// m4: VAR(1) whose top-left k0 x k0 block (k0 = min(ceil(p/5), 12)) has
// U(-0.25, 0.25) entries, redrawn until the spectral radius is below 0.95;
// t(8) innovations, 200-step burn-in.
TimeSeriesPanel gen_model4(Index p, Index n, std::uint64_t seed);
// m5: x_t = A z_t with a_kk = 0.8, off-diagonal U(-1, 1) with probability
// 1/3; the first k0 noise rows are temporally correlated Gaussians with a
// banded Toeplitz covariance (0.5 |i-j|^{-0.6}, band 7), the rest iid t(8).
TimeSeriesPanel gen_model5(Index p, Index n, std::uint64_t seed);

struct SimConfig {
  SimModel model = SimModel::m1;
  NoiseKind noise = NoiseKind::gaussian;
  Index p = 3;
  Index n = 300;
  std::vector<int> lag_list = {2};
  double alpha = 0.05;
  int reps = 500;
  Index n_draws = 2000;  // multiplier draws B
  std::uint64_t master_seed = 20260823;
  std::vector<Method> methods = {Method::maxcorr, Method::q1, Method::q2,
                                 Method::q3,      Method::lm, Method::tiao_box};
  bool pretransform = false;   // ensure the pre-transformed variant runs too
  bool fixed_loading = false;  // draw random loadings once, not per replication
  bool center = false;         // generated panels are mean zero by construction
  int tspca_lags = 5;
};

// key = value lines, '#' comments, unknown keys rejected by name.
SimConfig parse_sim_config(std::istream& in);
SimConfig load_sim_config(const std::string& path);

struct SimCell {
  Method method = Method::maxcorr;
  int lags = 0;         // K; 0 for the lag-free test
  bool skipped = false; // infeasible at these dimensions
  long rejections = 0;
  int reps = 0;
  double seconds = 0.0;

  double rate() const { return reps > 0 ? double(rejections) / reps : 0.0; }
  double mc_se() const;
};

struct SimReport {
  SimConfig config;
  std::vector<SimCell> cells;
  double total_seconds = 0.0;

  // Columns: method, K, reject_rate, mc_se, reps, seconds. Skipped cells
  // write NA. The seconds column is 0.000 unless include_timings is set, so
  // the default output is byte-identical across runs and worker counts.
  void write_csv(std::ostream& out, bool include_timings = false) const;

  const SimCell* find(Method method, int lags) const;
};

// Runs the experiment, farming replications out to `jobs` workers. Identical
// config and seed give an identical report at any worker count; replication r
// depends only on mix_seed(master_seed, r). `progress` draws a counter on
// stderr.
SimReport run_experiment(const SimConfig& config, int jobs = 1,
                         bool progress = false);

}  // namespace wnmax
