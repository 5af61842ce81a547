#pragma once

#include <stdexcept>
#include <string>

namespace beliefsum {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numeric argument is out of its admissible range (negative rate, bad count, ...).
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

// Matrix or vector sizes do not line up.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// The filter normalizer vanished; the observation has zero predictive mass.
class DegenerateObservation : public Error {
 public:
  using Error::Error;
};

// A configuration object violates its invariants.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; carries a line number when one is known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line) : Error(what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what), line_(-1) {}
  long line() const { return line_; }

 private:
  long line_;
};

// Caller misuse of a command or batch entry point (empty input, bad flags).
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace beliefsum
