#pragma once

#include <stdexcept>
#include <string>

namespace chainid {

// Base of every error thrown by the library. `kind()` is a stable
// machine-readable tag used by the CLI's JSON error output.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& message) : Error("argument", message) {}
};

// A matrix (or block of one) failed the positive-definiteness test.
class SingularityError : public Error {
 public:
  explicit SingularityError(const std::string& message) : Error("singularity", message) {}
};

// Input exceeds a documented algorithmic limit (permanent size, brute-force
// ground set, enumeration bound).
class CapabilityError : public Error {
 public:
  explicit CapabilityError(const std::string& message) : Error("capability", message) {}
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, double residual_gap)
      : Error("convergence", message), residual_gap_(residual_gap) {}

  double residual_gap() const noexcept { return residual_gap_; }

 private:
  double residual_gap_;
};

class GenerationError : public Error {
 public:
  GenerationError(const std::string& message, std::string most_failed_condition)
      : Error("generation", message), most_failed_condition_(std::move(most_failed_condition)) {}

  const std::string& most_failed_condition() const noexcept { return most_failed_condition_; }

 private:
  std::string most_failed_condition_;
};

// Sample data unusable for estimation (too few rows, non-PD empirical covariance).
class DataError : public Error {
 public:
  explicit DataError(const std::string& message) : Error("data", message) {}
};

}  // namespace chainid
