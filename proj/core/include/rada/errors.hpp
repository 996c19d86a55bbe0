#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rada {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(std::size_t pivot, double value)
      : Error("matrix is not positive definite: pivot " + std::to_string(pivot) +
              " = " + std::to_string(value)),
        pivot_index(pivot),
        pivot_value(value) {}

  std::size_t pivot_index;
  double pivot_value;
};

class ShrinkageFailed : public Error {
 public:
  using Error::Error;
};

class OracleDidNotConverge : public Error {
 public:
  OracleDidNotConverge(double grad_norm, std::size_t steps)
      : Error("precision oracle did not converge after " + std::to_string(steps) +
              " steps (gradient norm " + std::to_string(grad_norm) + ")"),
        final_grad_norm(grad_norm) {}

  double final_grad_norm;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

class AssignmentError : public Error {
 public:
  using Error::Error;
};

class BatchError : public Error {
 public:
  using Error::Error;
};

class GenError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_number(line) {}

  std::size_t line_number;
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t epoch, std::size_t step, const std::string& detail)
      : Error("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
              std::to_string(step) + ": " + detail),
        epoch_index(epoch),
        step_index(step) {}

  std::size_t epoch_index;
  std::size_t step_index;
};

class EvalError : public Error {
 public:
  using Error::Error;
};

/// Invalid user-supplied configuration; `field` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field_name, const std::string& what)
      : Error(field_name + ": " + what), field(std::move(field_name)) {}

  std::string field;
};

}  // namespace rada
