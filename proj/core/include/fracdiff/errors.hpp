#pragma once

#include <stdexcept>
#include <string>

namespace fracdiff {

/// Rejected input: parameter outside the admissible range of an operation.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed its own consistency checks.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Time stepping aborted; `last_valid_time` is the last time with a trusted slice.
class SolverAbort : public NumericalError {
 public:
  SolverAbort(const std::string& what, double last_valid_time)
      : NumericalError(what), last_valid_time_(last_valid_time) {}
  double last_valid_time() const noexcept { return last_valid_time_; }

 private:
  double last_valid_time_;
};

}  // namespace fracdiff
