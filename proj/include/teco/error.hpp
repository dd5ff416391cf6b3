#pragma once

#include <stdexcept>
#include <string>

namespace teco {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kLengthMismatch,
  kFileNotFound,
  kUnsupportedFormat,
  kUnsupportedBitDepth,
  kMissingFrame,
  kIo,
  kBackend,
  kDisconnected,
  kSeparation,
  kNotConverged,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace teco
