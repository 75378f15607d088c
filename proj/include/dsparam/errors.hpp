#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dsparam {

// Base class for all library errors. The CLI maps each subtype to a
// distinct process exit code, so new error kinds should derive from one
// of the categories below rather than from Error directly.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration or arguments that violate a documented precondition.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// File could not be read, written, or parsed.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// Artifact provenance mismatch: a stage was fed inputs whose recorded
// hashes do not match what the current configuration would produce.
class ProvenanceError : public Error {
 public:
  explicit ProvenanceError(const std::string& msg) : Error(msg) {}
};

// Numerical failure during a computation (non-finite states, divergence,
// degenerate inputs). Carries no location info beyond the message unless
// a subtype adds it.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

// Trajectory left the trust region (component magnitude above threshold
// or non-finite). Records the step index at which it happened.
class BlowUpError : public NumericalError {
 public:
  BlowUpError(const std::string& what, long step)
      : NumericalError(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

// Least-squares system has (numerically) linearly dependent columns.
// Carries the offending column labels so the caller can report which
// regressors collide.
class RankDeficiencyError : public NumericalError {
 public:
  RankDeficiencyError(const std::string& what, std::vector<std::string> columns)
      : NumericalError(what), columns_(std::move(columns)) {}
  const std::vector<std::string>& columns() const { return columns_; }

 private:
  std::vector<std::string> columns_;
};

// Input data carries no usable signal (zero variance, empty range, ...).
class DegenerateDataError : public NumericalError {
 public:
  explicit DegenerateDataError(const std::string& msg) : NumericalError(msg) {}
};

}  // namespace dsparam
