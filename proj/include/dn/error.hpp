#pragma once

#include <stdexcept>
#include <string>

namespace dn {

enum class ErrorCode {
  InvalidArgument,
  InvalidComplex,
  Unsupported,
  Overflow,
  OutOfDomain,
  DegeneratePoint,
  AmplitudeTooLarge,
  InvalidCotangentVector,
  InconsistentDoubleNormal,
  InvalidConfig,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

} // namespace dn
