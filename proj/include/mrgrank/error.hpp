#pragma once

#include <stdexcept>
#include <string>

namespace mrgrank {

// Broad failure classes; the C API maps each onto a status code and the
// service onto an HTTP status.
enum class ErrorCode {
  InvalidArgument,
  NotFound,
  OutOfRange,
  InvalidState,
  Parse,
  Io,
  Numeric,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Thrown by the exact solver when it runs out of iterations.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, double residual)
      : Error(ErrorCode::Numeric, message), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace mrgrank
