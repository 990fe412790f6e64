#pragma once

#include <stdexcept>
#include <string>

namespace powerdoa {

// Error categories carried by every exception thrown from the library.
// The CLI maps them onto process exit codes.
enum class ErrorCode {
  invalid_input,    // bad dimensions, malformed values, config violations
  io,               // file not found, parse failure, write failure
  non_convergence,  // solver exhausted its iteration budget
  no_signal,        // observation indistinguishable from the noise floor
  unidentifiable,   // objective flat, direction cannot be determined
  model_degenerate  // predicted compensated power vanishes at some angle
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_error(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input:
      return "invalid_input";
    case ErrorCode::io:
      return "io";
    case ErrorCode::non_convergence:
      return "non_convergence";
    case ErrorCode::no_signal:
      return "no_signal";
    case ErrorCode::unidentifiable:
      return "unidentifiable";
    case ErrorCode::model_degenerate:
      return "model_degenerate";
  }
  return "unknown";
}

}  // namespace powerdoa
