#pragma once

#include <stdexcept>
#include <string>

namespace erasurekf {

/// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: dimension mismatches, schema violations, misuse of an
/// operation's contract. Distinct from a system failing a model assumption.
class StructuralError : public Error {
  public:
    using Error::Error;
};

/// File or document could not be parsed; the message carries position or
/// field context.
class ParseError : public StructuralError {
  public:
    using StructuralError::StructuralError;
};

/// A well-formed system violates a standing model assumption (detectability,
/// diagonalizability, positive-definite noise), or an operation was asked to
/// run outside its stated hypotheses.
class AssumptionError : public Error {
  public:
    using Error::Error;
};

/// Numerical failure: singular matrix where an inverse is required,
/// non-finite values, or an estimation budget too small to decide.
class NumericError : public Error {
  public:
    using Error::Error;
};

} // namespace erasurekf
