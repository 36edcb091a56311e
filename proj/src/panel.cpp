#include "wnmax/panel.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "wnmax/errors.hpp"

namespace wnmax {

namespace {

void check_values(const Matrix& values) {
  if (values.rows() < 1) throw ParseError("panel has no components");
  if (values.cols() < 2)
    throw ParseError("panel needs at least two time points, got " +
                     std::to_string(values.cols()));
  if (!values.allFinite())
    throw ParseError("panel contains non-finite values");
}

}  // namespace

TimeSeriesPanel make_panel(Matrix values, bool centered) {
  check_values(values);
  return TimeSeriesPanel{std::move(values), centered};
}

TimeSeriesPanel load_csv(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && has_header) continue;
    if (line.empty()) {
      if (in.peek() == std::ifstream::traits_type::eof()) break;
      throw ParseError(path + ": blank line", line_no);
    }
    std::vector<double> row;
    std::stringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      std::size_t pos = 0;
      double value = std::numeric_limits<double>::quiet_NaN();
      try {
        value = std::stod(field, &pos);
      } catch (const std::exception&) {
        throw ParseError(path + ": non-numeric field '" + field + "'", line_no);
      }
      while (pos < field.size() &&
             (field[pos] == ' ' || field[pos] == '\t'))
        ++pos;
      if (pos != field.size())
        throw ParseError(path + ": non-numeric field '" + field + "'", line_no);
      if (!std::isfinite(value))
        throw ParseError(path + ": non-finite value", line_no);
      row.push_back(value);
    }
    if (row.empty()) throw ParseError(path + ": empty row", line_no);
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw ParseError(path + ": expected " + std::to_string(width) +
                           " fields, got " + std::to_string(row.size()),
                       line_no);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ": no data rows");
  if (rows.size() < 2)
    throw ParseError(path + ": need at least two time points", line_no);

  Matrix values(static_cast<Index>(width), static_cast<Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t i = 0; i < width; ++i)
      values(static_cast<Index>(i), static_cast<Index>(t)) = rows[t][i];
  return TimeSeriesPanel{std::move(values), false};
}

void save_csv(const TimeSeriesPanel& panel, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out.precision(17);
  for (Index t = 0; t < panel.n(); ++t) {
    for (Index i = 0; i < panel.p(); ++i) {
      if (i) out << ',';
      out << panel.values(i, t);
    }
    out << '\n';
  }
}

TimeSeriesPanel center(const TimeSeriesPanel& panel) {
  if (panel.centered) return panel;
  check_values(panel.values);
  TimeSeriesPanel out{panel.values, true};
  Vector means = out.values.rowwise().mean();
  out.values.colwise() -= means;
  return out;
}

}  // namespace wnmax
