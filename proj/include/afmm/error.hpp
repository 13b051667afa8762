#pragma once

#include <stdexcept>
#include <string>

namespace afmm {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Design matrix has fewer rows than columns.
class RankError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Malformed or inconsistent input data (CSV rows, run directories).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine could not produce a trustworthy answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested tail probability cannot be reached on the admissible
/// lambda range.
class CalibrationError : public NumericalError {
 public:
  CalibrationError(const std::string& what, double tail_at_min_lambda,
                   double tail_at_max_lambda)
      : NumericalError(what),
        tail_at_min_lambda_(tail_at_min_lambda),
        tail_at_max_lambda_(tail_at_max_lambda) {}

  double tail_at_min_lambda() const noexcept { return tail_at_min_lambda_; }
  double tail_at_max_lambda() const noexcept { return tail_at_max_lambda_; }

 private:
  double tail_at_min_lambda_;
  double tail_at_max_lambda_;
};

}  // namespace afmm
