#pragma once

#include <Eigen/Dense>

namespace wnmax {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Row-major block for streamed panel rows: both the producer and the consumer
// walk a row left to right, so rows should be contiguous.
using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace wnmax
