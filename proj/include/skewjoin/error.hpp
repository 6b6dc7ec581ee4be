#pragma once

#include <stdexcept>
#include <string>

namespace skewjoin {

// Base of every error raised by the library. The CLI maps these to exit 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters: bad theta, mismatched domains, unknown strategy...
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Frequencies requested for a relation with no tuples.
class EmptyRelationError : public Error {
 public:
  using Error::Error;
};

// A brute-force oracle would exceed its pair-comparison budget.
class OracleBudgetError : public Error {
 public:
  using Error::Error;
};

// A tuple reached the router with no directive for its join value.
class PlanCoverageError : public Error {
 public:
  using Error::Error;
};

// Caller-asserted property does not hold (e.g. PK side is not a key).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Malformed input file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace skewjoin
