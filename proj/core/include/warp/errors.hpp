#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace warp {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ParseErrc {
  kUnbalancedParens,
  kUnknownOperator,
  kMalformedVariable,
  kMultipleAsserts,
  kMalformedExpression,
};

const char* to_string(ParseErrc code);

class ParseError : public Error {
 public:
  ParseError(ParseErrc code, std::size_t offset, const std::string& what);

  ParseErrc code() const { return code_; }
  // Byte offset into the parsed text.
  std::size_t offset() const { return offset_; }

 private:
  ParseErrc code_;
  std::size_t offset_;
};

class UnsupportedSize : public Error {
 public:
  using Error::Error;
};

class UnknownProgram : public Error {
 public:
  using Error::Error;
};

class DomainTooLarge : public Error {
 public:
  using Error::Error;
};

class SolverSpawnFailure : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class PathBudgetExceeded : public Error {
 public:
  using Error::Error;
};

class UnsupportedCondition : public Error {
 public:
  using Error::Error;
};

class InfeasibleTierMix : public Error {
 public:
  using Error::Error;
};

class InvalidInstance : public Error {
 public:
  using Error::Error;
};

class EndpointUnreachable : public Error {
 public:
  using Error::Error;
};

class MissingCompletion : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace warp
