#pragma once

#include <stdexcept>
#include <string>

namespace stochham {

enum class ErrorCode {
  DimensionMismatch,
  InvalidArgument,
  GridMismatch,
  NonFinite,
  PreconditionViolated,
  NotAvailable,
  UnknownName,
  ResourceLimit,
  AllPathsExploded,
  ExplosionCapExceeded,
  Io,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define STOCHHAM_REQUIRE(cond, code, msg)            \
  do {                                               \
    if (!(cond)) throw ::stochham::Error((code), (msg)); \
  } while (0)

}  // namespace stochham
