#include "wnmax/lrcov.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "wnmax/errors.hpp"
#include "wnmax/rng.hpp"

namespace wnmax {

double qs_kernel(double x) {
  if (std::isinf(x)) return 0.0;
  const double z = 1.2 * std::numbers::pi * x;  // 6 pi x / 5
  if (std::abs(x) < 1e-3) {
    const double z2 = z * z;
    return 1.0 - z2 / 10.0 + z2 * z2 / 280.0;
  }
  return 25.0 / (12.0 * std::numbers::pi * std::numbers::pi * x * x) *
         (std::sin(z) / z - std::cos(z));
}

FPanel::FPanel(const Matrix& panel_values, int max_lag)
    : p_(panel_values.rows()), max_lag_(max_lag) {
  const Index n = panel_values.cols();
  if (max_lag < 1)
    throw std::invalid_argument("FPanel needs max_lag >= 1");
  if (n - max_lag < 2)
    throw std::invalid_argument("FPanel needs n - max_lag >= 2, got n = " +
                                std::to_string(n));
  n_tilde_ = n - max_lag;
  by_component_ = panel_values.transpose();
}

double FPanel::entry(int lag, Index i, Index j, Index t) const {
  return by_component_(t + lag, i) * by_component_(t, j);
}

void FPanel::fill_rows(Index row_begin, Index count, RowMajorMatrix& out) const {
  if (row_begin < 0 || count < 0 || row_begin + count > rows())
    throw std::invalid_argument("fill_rows out of range");
  if (out.rows() < count || out.cols() < n_tilde_)
    throw std::invalid_argument("fill_rows output too small");
  const Index pp = p_ * p_;
  for (Index r = 0; r < count; ++r) {
    const Index row = row_begin + r;
    const int k = 1 + int(row / pp);
    const Index rem = row % pp;
    const Index i = rem % p_;
    const Index j = rem / p_;
    out.row(r).head(n_tilde_) =
        by_component_.col(i).segment(k, n_tilde_).array() *
        by_component_.col(j).head(n_tilde_).array();
  }
}

Matrix FPanel::materialize(Index max_rows) const {
  if (rows() > max_rows)
    throw InfeasibleError("refusing to materialize " + std::to_string(rows()) +
                          " rows (limit " + std::to_string(max_rows) + ")");
  RowMajorMatrix block(rows(), n_tilde_);
  fill_rows(0, rows(), block);
  return Matrix(block);
}

double andrews_bandwidth_from_ar(const Vector& rho, const Vector& sigma2,
                                 Index n_tilde) {
  if (rho.size() != sigma2.size())
    throw std::invalid_argument("rho and sigma2 must have equal length");
  if (n_tilde < 1) throw std::invalid_argument("n_tilde must be positive");
  double num = 0.0;
  double den = 0.0;
  for (Index l = 0; l < rho.size(); ++l) {
    const double r = std::clamp(rho[l], -0.97, 0.97);
    const double s2 = sigma2[l];
    const double omr = 1.0 - r;
    const double s4 = s2 * s2;
    num += 4.0 * r * r * s4 / std::pow(omr, 8);
    den += s4 / std::pow(omr, 4);
  }
  if (den <= 0.0) return 0.0;
  const double a2 = num / den;
  return 1.3221 * std::pow(a2 * double(n_tilde), 0.2);
}

double andrews_bandwidth(const FPanel& f_panel) {
  const Index nt = f_panel.cols();
  const Index total = f_panel.rows();
  const Index block = 2048;
  RowMajorMatrix buf(std::min(block, total), nt);
  Vector rho(total), sigma2(total);
  for (Index begin = 0; begin < total; begin += block) {
    const Index count = std::min(block, total - begin);
    f_panel.fill_rows(begin, count, buf);
    for (Index r = 0; r < count; ++r) {
      auto row = buf.row(r).head(nt);
      const double mean = row.mean();
      Eigen::RowVectorXd g = row.array() - mean;
      const double den = g.head(nt - 1).squaredNorm();
      double raw = 0.0;
      if (den > 0.0)
        raw = g.tail(nt - 1).dot(g.head(nt - 1)) / den;
      const double rc = std::clamp(raw, -0.97, 0.97);
      rho[begin + r] = rc;
      sigma2[begin + r] = (1.0 - rc * rc) * g.squaredNorm() / double(nt);
    }
  }
  return andrews_bandwidth_from_ar(rho, sigma2, nt);
}

namespace {

Matrix toeplitz_cholesky(Index nt, double bandwidth, const SamplerConfig& cfg) {
  Matrix theta(nt, nt);
  std::vector<double> kern(nt);
  for (Index d = 0; d < nt; ++d)
    kern[d] = bandwidth > 0.0 ? qs_kernel(double(d) / bandwidth)
                              : (d == 0 ? 1.0 : 0.0);
  for (Index i = 0; i < nt; ++i)
    for (Index j = 0; j < nt; ++j) theta(i, j) = kern[std::abs(i - j)];

  double ridge = 0.0;
  for (int attempt = 0; attempt <= cfg.max_jitter_retries; ++attempt) {
    Matrix shifted = theta;
    if (ridge > 0.0) shifted.diagonal().array() += ridge;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    ridge = ridge == 0.0 ? cfg.jitter : ridge * 10.0;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(theta,
                                           Eigen::EigenvaluesOnly);
  throw NumericError(
      "multiplier covariance is not positive definite even after jitter "
      "(smallest eigenvalue " +
      std::to_string(es.eigenvalues().minCoeff()) + ")");
}

}  // namespace

MultiplierSampler::MultiplierSampler(const AutocovSet& autocov, FPanel f_panel,
                                     double bandwidth, std::uint64_t seed,
                                     SamplerConfig config)
    : f_panel_(std::move(f_panel)),
      bandwidth_(bandwidth),
      seed_(seed),
      config_(config) {
  if (!(bandwidth >= 0.0) || !std::isfinite(bandwidth))
    throw std::invalid_argument("bandwidth must be finite and nonnegative");
  if (autocov.p() != f_panel_.p() || autocov.max_lag != f_panel_.max_lag())
    throw std::invalid_argument(
        "autocovariance set and lagged-product panel disagree on dimensions");
  if (config_.block_rows < 1 || config_.batch_draws < 1 ||
      config_.threads < 1)
    throw std::invalid_argument("sampler config values must be positive");

  const Index p = f_panel_.p();
  scale_.resize(p * p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < p; ++i)
      scale_[j * p + i] = 1.0 / (autocov.sd[i] * autocov.sd[j]);

  theta_chol_ = toeplitz_cholesky(f_panel_.cols(), bandwidth_, config_);
}

MultiplierSampler build_sampler(const AutocovSet& autocov, FPanel f_panel,
                                double bandwidth, std::uint64_t seed,
                                SamplerConfig config) {
  return MultiplierSampler(autocov, std::move(f_panel), bandwidth, seed,
                           config);
}

Vector MultiplierSampler::draw_max_abs(Index count) const {
  if (count < 0) throw std::invalid_argument("draw count must be nonnegative");
  Vector out(count);
  if (count == 0) return out;

  const Index nt = f_panel_.cols();
  const Index total_rows = f_panel_.rows();
  const Index bd = config_.batch_draws;
  const Index n_batches = (count + bd - 1) / bd;
  const double inv_sqrt_nt = 1.0 / std::sqrt(double(nt));
  const Index pp = f_panel_.p() * f_panel_.p();

  // Every batch is computed at full width even when `count` truncates it:
  // a draw's arithmetic then never depends on how many draws were requested,
  // so shorter runs are bitwise prefixes of longer ones.
  auto run_batch = [&](Index b) {
    Matrix z(nt, bd);
    {
      auto rng = make_rng(mix_seed(seed_, std::uint64_t(b)));
      std::normal_distribution<double> normal(0.0, 1.0);
      for (Index c = 0; c < bd; ++c)
        for (Index t = 0; t < nt; ++t) z(t, c) = normal(rng);
    }
    // eta columns are L z; transposed so that one time index is one column.
    Matrix ht = (theta_chol_ * z).transpose();  // bd x nt

    Vector best = Vector::Zero(bd);
    Vector y(bd);
    RowMajorMatrix block(std::min(config_.block_rows, total_rows), nt);
    for (Index begin = 0; begin < total_rows; begin += config_.block_rows) {
      const Index rows_here = std::min(config_.block_rows, total_rows - begin);
      f_panel_.fill_rows(begin, rows_here, block);
      for (Index r = 0; r < rows_here; ++r) {
        const double* f = block.row(r).data();
        y.setZero();
        Index t = 0;
        // Fixed 4-wide accumulation order: the per-coordinate arithmetic is a
        // function of the row alone, which keeps draws invariant to
        // block_rows and to the batch-to-thread assignment.
        for (; t + 4 <= nt; t += 4)
          y += f[t] * ht.col(t) + f[t + 1] * ht.col(t + 1) +
               f[t + 2] * ht.col(t + 2) + f[t + 3] * ht.col(t + 3);
        for (; t < nt; ++t) y += f[t] * ht.col(t);
        const double coef = scale_[(begin + r) % pp] * inv_sqrt_nt;
        best = best.cwiseMax(coef * y.cwiseAbs());
      }
    }
    const Index first = b * bd;
    const Index keep = std::min(bd, count - first);
    out.segment(first, keep) = best.head(keep);
  };

  const int workers = int(std::min<Index>(config_.threads, n_batches));
  if (workers <= 1) {
    for (Index b = 0; b < n_batches; ++b) run_batch(b);
  } else {
    std::atomic<Index> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mu;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        try {
          for (Index b = next.fetch_add(1); b < n_batches;
               b = next.fetch_add(1))
            run_batch(b);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }
  return out;
}

Matrix oracle_jhat(const FPanel& f_panel, double bandwidth) {
  const Matrix f = f_panel.materialize();
  const Index nt = f.cols();
  const Index d = f.rows();
  Matrix jhat = Matrix::Zero(d, d);
  for (Index j = -(nt - 1); j <= nt - 1; ++j) {
    const double w = bandwidth > 0.0 ? qs_kernel(double(j) / bandwidth)
                                     : (j == 0 ? 1.0 : 0.0);
    if (w == 0.0) continue;
    Matrix h;
    if (j >= 0)
      h = f.rightCols(nt - j) * f.leftCols(nt - j).transpose() / double(nt);
    else
      h = f.leftCols(nt + j) * f.rightCols(nt + j).transpose() / double(nt);
    jhat += w * h;
  }
  return jhat;
}

double estimate_varrho(const MultiplierSampler& sampler) {
  const FPanel& f_panel = sampler.f_panel();
  const Index nt = f_panel.cols();
  const Index total = f_panel.rows();
  const Index pp = f_panel.p() * f_panel.p();
  const Index block = 1024;
  RowMajorMatrix buf(std::min(block, total), nt);
  double best = 0.0;
  for (Index begin = 0; begin < total; begin += block) {
    const Index count = std::min(block, total - begin);
    f_panel.fill_rows(begin, count, buf);
    // row l of buf * L is f_l^T L, whose squared norm is f_l^T Theta f_l.
    Matrix w = buf.topRows(count) *
               sampler.theta_cholesky().triangularView<Eigen::Lower>();
    for (Index r = 0; r < count; ++r) {
      const double s = sampler.scale()[(begin + r) % pp];
      best = std::max(best, s * s * w.row(r).squaredNorm() / double(nt));
    }
  }
  return best;
}

}  // namespace wnmax
