#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mflaw {

// Coarse error categories. The CLI maps these onto stable exit codes.
enum class ErrorKind {
  kInvalidArgument,  // precondition violated by the caller
  kInput,            // malformed or unreadable input data
  kDisconnected,     // operation needs a connected graph
  kInfeasible,       // generator could not satisfy its postcondition
  kConfig,           // experiment configuration rejected
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kInput: return "input";
    case ErrorKind::kDisconnected: return "disconnected";
    case ErrorKind::kInfeasible: return "infeasible";
    case ErrorKind::kConfig: return "config";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace mflaw
