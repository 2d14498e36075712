#pragma once

#include <stdexcept>
#include <string>

namespace episim {

enum class ErrorCode {
  InvalidArgument,
  BracketInvalid,
  CflViolation,
  BudgetExceeded,
  CountOverflow,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace episim
