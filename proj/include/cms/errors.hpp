#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cms {

// Stable machine-readable codes. These strings appear in CLI output and are
// part of the frozen output schema.
enum class ErrorCode {
  kSchema,
  kValidation,
  kCapacity,
  kTruncationInsufficient,
  kNotStronglyConnected,
  kEmptyWindow,
  kNotDrifting,
  kNonConvergent,
  kPreconditionFailed,
  kSamplingExhausted,
  kConnectorNotFound,
  kNoEscape,
};

std::string_view error_code_name(ErrorCode code);

class CmsError : public std::runtime_error {
 public:
  CmsError(ErrorCode code, std::string message, std::string field_path = {})
      : std::runtime_error(std::move(message)),
        code_(code),
        field_path_(std::move(field_path)) {}

  ErrorCode code() const { return code_; }
  // JSON-pointer-like path of the offending input field, empty when the
  // error is not tied to an input document.
  const std::string& field_path() const { return field_path_; }

 private:
  ErrorCode code_;
  std::string field_path_;
};

}  // namespace cms
