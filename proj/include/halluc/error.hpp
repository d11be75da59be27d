#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace halluc {

enum class ErrorCode {
  kFormat,
  kStorage,
  kUnsupportedFormat,
  kCorruptFile,
  kValidation,
  kDegenerateEmbedding,
  kMissingData,
  kInvalidPair,
  kDistractorCollision,
  kInvalidSpec,
  kEmptyTask,
  kIncompleteGroup,
  kJoin,
  kProvider,
  kShape,
  kInput,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace halluc
