#pragma once

#include <stdexcept>
#include <string>

namespace fwl {

enum class ErrorCode {
  domain = 1,
  precondition = 2,
  no_convergence = 3,
  numerical = 4,
  existence = 5,
  degenerate = 6,
  config = 7,
  io = 8,
  argument = 9,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// carries the last residual so callers can report how far Newton got
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, double residual)
      : Error(ErrorCode::no_convergence, what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace fwl
