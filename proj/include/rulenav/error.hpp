#pragma once

#include <stdexcept>
#include <string>

namespace rulenav {

enum class ErrorCode {
  kMissingEdge,
  kUnknownNode,
  kUnknownRule,
  kDimension,
  kParse,
  kInvariant,
  kValidation,
  kTooFewSamples,
  kInfeasible,
  kIo,
  kUnreachable,
  kAlignment,
  kEmptyCandidates,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; callers switch on code() where the
// distinction matters (the CLI maps everything to exit code 1).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingEdge: return "missing edge";
    case ErrorCode::kUnknownNode: return "unknown node";
    case ErrorCode::kUnknownRule: return "unknown rule";
    case ErrorCode::kDimension: return "dimension error";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kInvariant: return "invariant violation";
    case ErrorCode::kValidation: return "validation error";
    case ErrorCode::kTooFewSamples: return "too few samples";
    case ErrorCode::kInfeasible: return "infeasible target";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kUnreachable: return "unreachable target";
    case ErrorCode::kAlignment: return "alignment error";
    case ErrorCode::kEmptyCandidates: return "empty candidate set";
  }
  return "error";
}

}  // namespace rulenav
