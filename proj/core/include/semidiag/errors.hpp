#pragma once

#include <stdexcept>
#include <string>

#include "semidiag/types.hpp"

namespace semidiag {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad expression text, bad config, wrong dimensions.
class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& what, int line, int column)
      : InputError(what + " at line " + std::to_string(line) + ", column " +
                   std::to_string(column)),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Everything that goes wrong while computing rather than while reading input.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Pole or overflow hit while evaluating an expression.
class EvalError : public NumericalError {
 public:
  EvalError(const std::string& what, cplx at)
      : NumericalError(what), at_(at) {}
  cplx at() const { return at_; }

 private:
  cplx at_;
};

/// The two eigenvalue groups came closer than the configured threshold.
class SeparationFailure : public NumericalError {
 public:
  SeparationFailure(const std::string& what, double gap, cplx at)
      : NumericalError(what), gap_(gap), at_(at) {}
  double gap() const { return gap_; }
  cplx at() const { return at_; }

 private:
  double gap_;
  cplx at_;
};

class SingularOperator : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Iteration did not converge. `estimate` carries a module-specific hint
/// (contraction ratio, threshold step size).
class ConvergenceFailure : public NumericalError {
 public:
  ConvergenceFailure(const std::string& what, double estimate)
      : NumericalError(what), estimate_(estimate) {}
  double estimate() const { return estimate_; }

 private:
  double estimate_;
};

class PreconditionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace semidiag
