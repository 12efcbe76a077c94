#pragma once

#include <stdexcept>
#include <string>

namespace dendromap {

enum class ErrorCode {
  Parse = 1,
  Validation,
  Shape,
  NonFinite,
  EmptyInput,
  Range,
  UnknownNode,
  UnknownLeaf,
  DegenerateSpace,
  NoPredictions,
  EmptySubset,
  Io,
  InvalidArgument,
};

const char* to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above; the C
// API maps them one-to-one onto dm_status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace dendromap
