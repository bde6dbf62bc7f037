#include "cms/errors.hpp"

namespace cms {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSchema: return "SchemaError";
    case ErrorCode::kValidation: return "ValidationError";
    case ErrorCode::kCapacity: return "CapacityError";
    case ErrorCode::kTruncationInsufficient: return "TruncationInsufficient";
    case ErrorCode::kNotStronglyConnected: return "NotStronglyConnected";
    case ErrorCode::kEmptyWindow: return "EmptyWindow";
    case ErrorCode::kNotDrifting: return "NotDrifting";
    case ErrorCode::kNonConvergent: return "NonConvergent";
    case ErrorCode::kPreconditionFailed: return "PreconditionFailed";
    case ErrorCode::kSamplingExhausted: return "SamplingExhausted";
    case ErrorCode::kConnectorNotFound: return "ConnectorNotFound";
    case ErrorCode::kNoEscape: return "NoEscape";
  }
  return "Unknown";
}

}  // namespace cms
