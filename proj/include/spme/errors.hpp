// Error types shared by every module of the laboratory.
//
// Precondition failures raise InvalidArgument / OutOfRange; numerical
// failures carry enough context (step index, diagnostics) for a report.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spme {

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class OutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Newton iteration failed to converge within newton_max iterations.
class SolverDivergence : public std::runtime_error {
 public:
  SolverDivergence(const std::string& what, std::size_t step)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// A NaN or Inf appeared in the discrete solution.
class NumericalBlowup : public std::runtime_error {
 public:
  NumericalBlowup(const std::string& what, std::size_t step)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class OutOfHorizon : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DomainMarginError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateCoefficient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TooFewCenters : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ContainmentFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spme
