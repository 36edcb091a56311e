#pragma once

#include <string>

#include "wnmax/types.hpp"

namespace wnmax {

// A p-component time series observed at n time points. Column t of values is
// the observation vector at time t, so each component series runs along a row.
struct TimeSeriesPanel {
  Matrix values;          // p x n
  bool centered = false;  // true once row means have been removed

  Index p() const { return values.rows(); }
  Index n() const { return values.cols(); }
};

// Wraps a p x n matrix after checking shape (p >= 1, n >= 2) and finiteness.
TimeSeriesPanel make_panel(Matrix values, bool centered = false);

// Reads a CSV file whose rows are time points and whose columns are component
// series; the panel stores the transpose. Ragged rows, non-numeric fields and
// empty files raise ParseError with a 1-based line number.
TimeSeriesPanel load_csv(const std::string& path, bool has_header = false);

// Writes the layout load_csv reads (rows = time points, full precision).
void save_csv(const TimeSeriesPanel& panel, const std::string& path);

// Subtracts each component's sample mean. A panel already flagged as centered
// is returned unchanged, which makes the operation idempotent bit for bit.
TimeSeriesPanel center(const TimeSeriesPanel& panel);

}  // namespace wnmax
