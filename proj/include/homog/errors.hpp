#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace homog {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input detected before any computation starts (CLI exit code 2).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a certified answer (CLI exit code 3).
class SolverError : public Error {
 public:
  using Error::Error;
};

class InvalidField : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NonPositiveRate : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InvalidGrid : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InvalidMass : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DomainTooSmall : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class CflViolation : public ValidationError {
 public:
  CflViolation(const std::string& what, double dt_max)
      : ValidationError(what), dt_max_(dt_max) {}
  double dt_max() const noexcept { return dt_max_; }

 private:
  double dt_max_;
};

class PecletViolation : public SolverError {
 public:
  PecletViolation(const std::string& what, std::size_t n_required)
      : SolverError(what), n_required_(n_required) {}
  std::size_t n_required() const noexcept { return n_required_; }

 private:
  std::size_t n_required_;
};

class NoConvergence : public SolverError {
 public:
  NoConvergence(const std::string& what, std::size_t iterations)
      : SolverError(what), iterations_(iterations) {}
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  std::size_t iterations_;
};

class NonPositiveEigenvector : public SolverError {
 public:
  using SolverError::SolverError;
};

class EigenvalueMismatch : public SolverError {
 public:
  using SolverError::SolverError;
};

class DegeneratePairing : public SolverError {
 public:
  using SolverError::SolverError;
};

class BracketFailure : public SolverError {
 public:
  using SolverError::SolverError;
};

class NonFiniteState : public SolverError {
 public:
  using SolverError::SolverError;
};

class InconclusiveFit : public SolverError {
 public:
  using SolverError::SolverError;
};

class WindowOverlap : public SolverError {
 public:
  using SolverError::SolverError;
};

class SnapshotMissing : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace homog
