#pragma once

#include <stdexcept>
#include <string>

namespace wnmax {

// Malformed input file. line is 1-based; 0 means not tied to a single line.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what, long line = 0)
      : std::runtime_error(what), line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

// A component series has zero sample variance; correlations are undefined.
class DegenerateComponentError : public std::runtime_error {
 public:
  DegenerateComponentError(const std::string& what, long component)
      : std::runtime_error(what), component_(component) {}
  long component() const noexcept { return component_; }

 private:
  long component_;
};

// The requested test cannot be run at the given dimensions.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical breakdown: failed factorization, singular covariance.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wnmax
