#include "warp/errors.hpp"

namespace warp {

const char* to_string(ParseErrc code) {
  switch (code) {
    case ParseErrc::kUnbalancedParens:
      return "UnbalancedParens";
    case ParseErrc::kUnknownOperator:
      return "UnknownOperator";
    case ParseErrc::kMalformedVariable:
      return "MalformedVariable";
    case ParseErrc::kMultipleAsserts:
      return "MultipleAsserts";
    case ParseErrc::kMalformedExpression:
      return "MalformedExpression";
  }
  return "ParseError";
}

ParseError::ParseError(ParseErrc code, std::size_t offset,
                       const std::string& what)
    : Error(std::string(to_string(code)) + " at offset " +
            std::to_string(offset) + ": " + what),
      code_(code),
      offset_(offset) {}

}  // namespace warp
