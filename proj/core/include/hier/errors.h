#ifndef HIER_ERRORS_H_
#define HIER_ERRORS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace hier {

enum class ErrorCode {
  kInvalidArgument,
  kParseError,
  kCapExceeded,
  kBackendUnavailable,
  kMalformedResponse,
  kMatrixShapeMismatch,
  kInvalidConflictMatrix,
  kTooLarge,
  kBaseTooSmall,
  kInconsistentResolution,
  kDegenerateReference,
};

std::string_view error_code_name(ErrorCode code);

// Every domain failure raised by the library is an Error. The CLI maps these
// to exit code 1; anything else escaping is a bug.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hier

#endif  // HIER_ERRORS_H_
