#include "wnmax/tspca.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "wnmax/errors.hpp"
#include "wnmax/moments.hpp"

namespace wnmax {

LinearTransform fit_transform(const TimeSeriesPanel& panel, int lag_horizon) {
  if (lag_horizon < 0)
    throw std::invalid_argument("lag_horizon must be nonnegative");
  if (panel.n() <= lag_horizon + 1)
    throw std::invalid_argument("need n > lag_horizon + 1");

  const Matrix sigma0 = sample_autocov(panel, 0);
  for (Index i = 0; i < sigma0.rows(); ++i)
    if (!(sigma0(i, i) > 0.0))
      throw DegenerateComponentError(
          "component " + std::to_string(i) + " has zero sample variance", i);

  // Prewhiten by the inverse symmetric square root of the contemporaneous
  // covariance. The whitened series has identity lag-0 covariance, so the
  // rotation below is determined by the lagged structure alone; with only a
  // per-component rescaling the leading eigenvectors chase contemporaneous
  // correlation instead and the transform stops concentrating signal.
  Eigen::SelfAdjointEigenSolver<Matrix> es0(sigma0);
  if (es0.info() != Eigen::Success)
    throw NumericError("covariance eigendecomposition failed");
  const Vector d = es0.eigenvalues();
  // The map's singular values are the inverse square roots of these
  // eigenvalues, so this keeps its singular-value ratio above 1e-10.
  if (!(d.minCoeff() > 1e-20 * d.maxCoeff()))
    throw NumericError("pre-transform would be numerically singular");
  const Matrix whiten = es0.eigenvectors() *
                        d.cwiseSqrt().cwiseInverse().asDiagonal() *
                        es0.eigenvectors().transpose();

  TimeSeriesPanel white{whiten * panel.values, panel.centered};
  const Index p = panel.p();

  // A sample cross-correlation of white noise is O(n^{-1/2}), and the
  // aggregate below sums p^2 * lag_horizon of them squared, which swamps a
  // low-dimensional signal once p^2 is large against n. Hard-thresholding at
  // the noise scale keeps only entries that carry real serial correlation;
  // the lag-0 term is the identity by construction and is left alone. The
  // constant 1.5 balances the two failure modes: at 1.0 enough noise entries
  // survive to rebuild the spurious spectrum, at 2.0 so few signal entries
  // remain that the rotation misses the strongest correlations.
  const double cut =
      1.5 * std::sqrt(std::log(double(p)) / double(panel.n()));
  Matrix w = Matrix::Zero(p, p);
  {
    const Matrix c0 = sample_autocov(white, 0);
    w.noalias() += c0 * c0.transpose();
  }
  for (int k = 1; k <= lag_horizon; ++k) {
    Matrix c = sample_autocov(white, k);
    c = (c.cwiseAbs().array() < cut).select(0.0, c);
    w.noalias() += c * c.transpose();
  }

  Eigen::SelfAdjointEigenSolver<Matrix> es(w);
  if (es.info() != Eigen::Success)
    throw NumericError("eigendecomposition failed");

  // Columns come back in ascending eigenvalue order; flip to descending and
  // fix each eigenvector's sign by its first nonnegligible coordinate.
  Matrix v(p, p);
  for (Index c = 0; c < p; ++c) {
    Vector col = es.eigenvectors().col(p - 1 - c);
    for (Index i = 0; i < p; ++i) {
      if (std::abs(col[i]) > 1e-12) {
        if (col[i] < 0.0) col = -col;
        break;
      }
    }
    v.col(c) = col;
  }

  LinearTransform transform;
  transform.q = v.transpose() * whiten;
  transform.lag_horizon = lag_horizon;
  return transform;
}

TimeSeriesPanel apply(const LinearTransform& transform,
                      const TimeSeriesPanel& panel) {
  if (transform.q.cols() != panel.p())
    throw std::invalid_argument("transform and panel dimensions disagree");
  return TimeSeriesPanel{transform.q * panel.values, panel.centered};
}

void save_csv(const LinearTransform& transform, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out.precision(17);
  out << "lag_horizon," << transform.lag_horizon << '\n';
  for (Index i = 0; i < transform.q.rows(); ++i) {
    for (Index j = 0; j < transform.q.cols(); ++j) {
      if (j) out << ',';
      out << transform.q(i, j);
    }
    out << '\n';
  }
}

LinearTransform load_transform_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file", 1);
  LinearTransform transform;
  {
    std::stringstream head(line);
    std::string tag, value;
    if (!std::getline(head, tag, ',') || tag != "lag_horizon" ||
        !std::getline(head, value))
      throw ParseError(path + ": expected 'lag_horizon,<k>' header", 1);
    transform.lag_horizon = std::stoi(value);
  }
  std::vector<std::vector<double>> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ','))
      try {
        row.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw ParseError(path + ": non-numeric field '" + field + "'", line_no);
      }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ": no matrix rows");
  const std::size_t p = rows.size();
  transform.q.resize(Index(p), Index(p));
  for (std::size_t i = 0; i < p; ++i) {
    if (rows[i].size() != p)
      throw ParseError(path + ": transform matrix must be square",
                       long(i) + 2);
    for (std::size_t j = 0; j < p; ++j)
      transform.q(Index(i), Index(j)) = rows[i][j];
  }
  return transform;
}

}  // namespace wnmax
