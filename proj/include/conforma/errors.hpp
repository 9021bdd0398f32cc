#pragma once

#include <stdexcept>
#include <string>

namespace conforma {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kNotPositiveDefinite,
  kInvalidAlpha,
  kInvalidProbability,
  kEmptyRegion,
  kAllPointsFailed,
  kUnknownFunction,
  kMissingLevel,
  kParse,
  kIo,
  kTooManySkipped,
};

const char* error_code_name(ErrorCode code) noexcept;

/// Single exception type thrown by the core; the C layer maps `code()` onto
/// its status enumeration.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace conforma
