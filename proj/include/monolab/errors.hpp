#pragma once

#include <stdexcept>
#include <string>

namespace monolab {

// Base class for all library errors.  Subclasses exist so that callers (and
// the CLI exit-code mapping) can distinguish bad input from numerical
// breakdown without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed arguments: dimension mismatches, empty graphs, non-positive
// regularization weights, invalid sample plans, and similar caller mistakes.
class InputError : public Error {
 public:
  using Error::Error;
};

// Norm exponent outside the supported open interval (1, inf).
class NormError : public Error {
 public:
  using Error::Error;
};

// A problem file could not be read or is not syntactically valid JSON/CSV.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A problem file parsed but violates the input schema.  The message always
// names the offending field and the violated constraint.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& field, const std::string& constraint)
      : Error("schema violation at '" + field + "': " + constraint),
        field_(field),
        constraint_(constraint) {}

  const std::string& field() const { return field_; }
  const std::string& constraint() const { return constraint_; }

 private:
  std::string field_;
  std::string constraint_;
};

// The objective being minimized was detected to be unbounded below.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// An iteration budget ran out before the requested accuracy was reached.
// Callers that can salvage a best-effort result catch this and inspect the
// payload attached by the throwing site (see ekeland.hpp / resolvent.hpp).
class BudgetError : public Error {
 public:
  using Error::Error;
};

// The requested operation is not defined for the given representation
// (for example an exact subdifferential of a sampled, one-sided surrogate).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace monolab
