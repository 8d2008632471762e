#pragma once

#include <stdexcept>
#include <string>

namespace kimura {

/// Argument outside the mathematical domain of an operation (b <= 0, y <= 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Complex argument outside the admissible sector.
class SectorError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Quadrature or iteration failed to meet its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Time step too coarse for the coefficient variation it must resolve.
class StepSizeError : public ConvergenceError {
 public:
  using ConvergenceError::ConvergenceError;
};

/// Mismatched dimensions between a model and the supplied points or grids.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A structural invariant was violated by the supplied data
/// (negative boundary weight, non-clean boundary, ...).
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A boundary face that is neither tangent nor transverse at the given tolerances.
class NotCleanError : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

/// Malformed or schema-violating configuration document.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

}  // namespace detail
}  // namespace kimura
