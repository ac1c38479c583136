#pragma once

#include <stdexcept>
#include <string>

namespace dcndp {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (edge lists, CSV, solution files).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what), line_(0) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that violates a structural rule (e.g. a self-loop).
class RejectedInputError : public Error {
 public:
  using Error::Error;
};

/// Attribute row that does not match any node of the graph.
class JoinError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (generator weights, policy JSON, pipeline config).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A policy refers to attributes that the population does not carry.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Exhaustive enumeration refused because the instance is too large.
class SizeGuardError : public Error {
 public:
  using Error::Error;
};

/// External solver failed to run or exited with a nonzero status.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Solver output that cannot be interpreted.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Reported bound exceeds the incumbent objective.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace dcndp
