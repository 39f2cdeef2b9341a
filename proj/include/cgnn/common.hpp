#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cgnn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

using NodeId = std::uint32_t;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual std::string kind() const { return "error"; }
};

class ParseError : public Error {
public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }
  std::string kind() const override { return "parse_error"; }

private:
  std::string file_;
  std::size_t line_;
};

class DimensionError : public Error {
public:
  using Error::Error;
  std::string kind() const override { return "dimension_mismatch"; }
};

class InvalidValueError : public Error {
public:
  using Error::Error;
  std::string kind() const override { return "invalid_value"; }
};

class GraphError : public Error {
public:
  using Error::Error;
  std::string kind() const override { return "invalid_graph"; }
};

/// Raised when training produces a non-finite loss, gradient or parameter.
class NumericalError : public Error {
public:
  using Error::Error;
  std::string kind() const override { return "numerical_divergence"; }
};

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace cgnn
