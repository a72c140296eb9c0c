#pragma once

#include <stdexcept>
#include <string>

namespace ssrd {

/// Base class for every error the engine raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input files or text (CSV, scenario files, sequence literals).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input parsed but violates a domain invariant.
class DataError : public Error {
 public:
  using Error::Error;
};

/// The requested problem has no feasible solution (e.g. T < ceil(N/k)).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// An MDP action that violates the mask or size bounds. `constraint()` names
/// the violated rule so remote callers can report it.
class InvalidActionError : public Error {
 public:
  InvalidActionError(std::string constraint, const std::string& what)
      : Error(what), constraint_(std::move(constraint)) {}
  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

}  // namespace ssrd
